use super::grid::{Cell, OccupancyGrid};
use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Smallest cluster kept as a frontier; single-cell noise is discarded.
pub const MIN_FRONTIER_CELLS: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub id: usize,
    pub cells: Vec<Cell>,
    /// Mean of the member cell centers, in meters.
    pub centroid: Vec2,
}

impl Frontier {
    /// Member cell closest to the centroid; a reachable stand-in for the
    /// centroid, which may fall outside free space on curved frontiers.
    pub fn anchor(&self, grid: &OccupancyGrid) -> Cell {
        *self
            .cells
            .iter()
            .min_by(|a, b| {
                let da = grid.center(**a).dist(self.centroid);
                let db = grid.center(**b).dist(self.centroid);
                da.total_cmp(&db).then(a.cmp(b))
            })
            .expect("frontier has cells")
    }
}

pub fn extract_frontiers(grid: &OccupancyGrid) -> Vec<Frontier> {
    extract_frontiers_with(grid, MIN_FRONTIER_CELLS)
}

/// Free cells with an unknown 4-neighbour, clustered by 8-connectivity.
/// Ids follow row-major discovery order, so they are stable for a given grid.
pub fn extract_frontiers_with(grid: &OccupancyGrid, min_cells: usize) -> Vec<Frontier> {
    let Some(known) = grid.known_bounds() else {
        return Vec::new();
    };
    let window = grid.clip(known.expand(1));
    let mut mask = vec![false; window.area()];
    for c in window.cells() {
        if grid.is_frontier_cell(c) {
            mask[window.local_index(c)] = true;
        }
    }
    let mut seen = vec![false; window.area()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(window.cell_of_local(start));
        let mut cells = Vec::new();
        while let Some(c) = queue.pop_front() {
            cells.push(c);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let n = c.offset(dx, dy);
                    if (dx, dy) == (0, 0) || !window.contains(n) {
                        continue;
                    }
                    let i = window.local_index(n);
                    if mask[i] && !seen[i] {
                        seen[i] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        if cells.len() >= min_cells {
            cells.sort_by_key(|c| (c.y, c.x));
            let sum = cells.iter().fold(Vec2::default(), |acc, c| acc + grid.center(*c));
            let centroid = sum * (1.0 / cells.len() as f64);
            out.push(Frontier { id: out.len(), cells, centroid });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::CellState;

    fn grid_from(rows: &[&str]) -> OccupancyGrid {
        let mut text = format!("grid {} {} 0.05 0 0\n", rows[0].len(), rows.len());
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        OccupancyGrid::parse_text(&text).unwrap()
    }

    #[test]
    fn fully_known_grid_has_no_frontiers() {
        let g = grid_from(&["....", ".##.", "...."]);
        assert!(extract_frontiers(&g).is_empty());
    }

    #[test]
    fn unknown_left_column_yields_one_frontier_next_to_it() {
        let g = grid_from(&["?....", "?....", "?....", "?....", "?...."]);
        let f = extract_frontiers(&g);
        assert_eq!(f.len(), 1);
        let expected: Vec<Cell> = (0..5).map(|y| Cell::new(1, y)).collect();
        assert_eq!(f[0].cells, expected);
        assert!((f[0].centroid.x - 0.075).abs() < 1e-12);
        assert!((f[0].centroid.y - 0.125).abs() < 1e-12);
    }

    #[test]
    fn pockets_split_by_wall_give_separate_frontiers() {
        let g = grid_from(&[
            "?...#...?",
            "?...#...?",
            "?...#...?",
            "?...#...?",
            "?...#...?",
        ]);
        let f = extract_frontiers(&g);
        assert_eq!(f.len(), 2);
        assert!(f.iter().all(|fr| fr.cells.len() == 5));
    }

    #[test]
    fn tiny_clusters_are_dropped() {
        let g = grid_from(&["###", "#.?", "###"]);
        assert!(extract_frontiers(&g).is_empty());
        assert_eq!(extract_frontiers_with(&g, 1).len(), 1);
    }

    #[test]
    fn all_reported_cells_satisfy_the_predicate() {
        let g = grid_from(&["??....", "?..#..", "......", "..##??", "......"]);
        for f in extract_frontiers_with(&g, 1) {
            for c in &f.cells {
                assert_eq!(g.get(*c), Some(CellState::Free));
                assert!(g.neighbors4(*c).any(|n| g.get(n) == Some(CellState::Unknown)));
            }
        }
    }
}
