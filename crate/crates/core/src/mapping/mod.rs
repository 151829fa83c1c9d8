//! Bird's-eye-view occupancy mapping: depth integration, frontier extraction
//! and geodesic distances.

mod frontier;
pub(crate) mod geodesic;
mod grid;

pub use frontier::{extract_frontiers, extract_frontiers_with, Frontier, MIN_FRONTIER_CELLS};
pub use geodesic::{distance_field, geodesic_distance, snap_to_traversable, DistanceField, SNAP_RADIUS_M};
pub use grid::{Bounds, Cell, CellState, GridParseError, OccupancyGrid};

use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Closest and farthest perceived distances of the sensor, in meters.
pub const MIN_PERCEPTION_RANGE: f64 = 1.5;
pub const MAX_PERCEPTION_RANGE: f64 = 10.0;
pub const HEADING_QUANTUM_DEG: i32 = 30;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("pose ({x:.3}, {y:.3}) lies outside the occupancy grid")]
    PoseOutsideGrid { x: f64, y: f64 },
}

/// Agent pose in the BEV frame. The heading is kept on the 30 degree lattice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading_deg: i32,
}

impl Pose {
    /// Builds a pose, snapping the heading to the nearest multiple of 30 degrees.
    pub fn new(position: Vec2, heading_deg: i32) -> Self {
        let q = HEADING_QUANTUM_DEG;
        let snapped = ((heading_deg as f64 / q as f64).round() as i32) * q;
        Self { position, heading_deg: snapped.rem_euclid(360) }
    }

    pub fn direction(&self) -> Vec2 {
        Vec2::from_angle_deg(self.heading_deg as f64)
    }

    pub fn rotated(&self, delta_deg: i32) -> Pose {
        Pose::new(self.position, self.heading_deg + delta_deg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthRay {
    /// Ray direction relative to the agent heading.
    pub bearing_deg: f64,
    /// Distance to the first obstacle, `None` when nothing is hit within range.
    pub range: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DepthScan {
    pub rays: Vec<DepthRay>,
    pub max_range: f64,
}

/// Carves the scan into the grid and returns how many cells changed state.
///
/// Cells crossed before a hit become free and the hit cell becomes occupied.
/// Rays without a hit free everything up to `max_range`.
pub fn integrate_depth(grid: &mut OccupancyGrid, pose: &Pose, scan: &DepthScan) -> Result<usize, MapError> {
    if grid.cell_at(pose.position).is_none() {
        return Err(MapError::PoseOutsideGrid { x: pose.position.x, y: pose.position.y });
    }
    let max_range = if scan.max_range > 0.0 { scan.max_range } else { MAX_PERCEPTION_RANGE };
    let mut changed = 0;
    let mut cells = Vec::new();
    for ray in &scan.rays {
        let dir = Vec2::from_angle_deg(pose.heading_deg as f64 + ray.bearing_deg);
        let hit = ray.range.filter(|r| *r <= max_range);
        let reach = hit.unwrap_or(max_range);
        cells.clear();
        grid.traverse(pose.position, dir, reach + 1e-6, |cell, t| {
            cells.push((cell, t));
            true
        });
        for &(cell, t) in &cells {
            match hit {
                Some(r) if t >= r - 1e-9 => {
                    changed += grid.mark_occupied(cell) as usize;
                    break;
                }
                _ => changed += grid.mark_free(cell) as usize,
            }
        }
    }
    Ok(changed)
}
