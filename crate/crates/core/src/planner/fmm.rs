use crate::geometry::Vec2;
use crate::mapping::geodesic::{diagonal_ok, search_window, HeapItem, NEIGHBORS8};
use crate::mapping::{snap_to_traversable, Bounds, Cell, CellState, OccupancyGrid, SNAP_RADIUS_M};
use std::collections::{BinaryHeap, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("start ({0:.2}, {1:.2}) is not in traversable space")]
    BadStart(f64, f64),
    #[error("goal is unreachable")]
    Unreachable,
}

/// Cost knobs of the arrival-time field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    /// Travel cost of an unknown cell relative to a free one.
    pub unknown_cost: f64,
    /// Cells closer than this to an obstacle cost extra.
    pub clearance_m: f64,
    /// Extra cost right next to an obstacle; falls off linearly to zero at
    /// `clearance_m`.
    pub clearance_weight: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { unknown_cost: 2.0, clearance_m: 0.0, clearance_weight: 0.0 }
    }
}

impl PlanOptions {
    /// Keeps paths away from walls, for driving the agent.
    pub fn with_clearance(clearance_m: f64, weight: f64) -> Self {
        Self { clearance_m, clearance_weight: weight, ..Self::default() }
    }
}

/// Arrival time (meters of free-space travel) from a seed cell, solved with
/// a first-order upwind fast marching scheme on the 4-neighbourhood.
#[derive(Clone, Debug)]
pub struct GeodesicField {
    window: Bounds,
    time: Vec<f64>,
    seed: Cell,
    resolution: f64,
}

fn clearance_cells(opts: &PlanOptions, resolution: f64) -> i32 {
    (opts.clearance_m / resolution - 1e-9).ceil().max(0.0) as i32
}

fn obstacle_distance(grid: &OccupancyGrid, window: Bounds, radius: i32) -> Vec<i32> {
    let mut d = vec![i32::MAX; window.area()];
    let mut q = VecDeque::new();
    for c in window.cells() {
        if grid.is_occupied(c) {
            let i = window.local_index(c);
            d[i] = 0;
            q.push_back(c);
        }
    }
    while let Some(c) = q.pop_front() {
        let dc = d[window.local_index(c)];
        if dc >= radius {
            continue;
        }
        for (dx, dy) in NEIGHBORS8 {
            let n = c.offset(dx, dy);
            if window.contains(n) {
                let j = window.local_index(n);
                if d[j] > dc + 1 {
                    d[j] = dc + 1;
                    q.push_back(n);
                }
            }
        }
    }
    d
}

impl GeodesicField {
    /// Solves the field from `goal` over the known area plus `extra` cells.
    pub fn compute(grid: &OccupancyGrid, goal: Vec2, extra: &[Cell], opts: &PlanOptions) -> Option<Self> {
        let seed = snap_to_traversable(grid, goal, SNAP_RADIUS_M)?;
        let mut cells = vec![seed];
        cells.extend_from_slice(extra);
        let window = search_window(grid, &cells);
        let n = window.area();
        let radius = clearance_cells(opts, grid.resolution());
        let clearance = (radius > 0 && opts.clearance_weight > 0.0).then(|| obstacle_distance(grid, window, radius));
        let speed_cost = |c: Cell, i: usize| -> f64 {
            let base = match grid.get(c) {
                Some(CellState::Free) => 1.0,
                Some(CellState::Unknown) => opts.unknown_cost,
                _ => f64::INFINITY,
            };
            match &clearance {
                Some(d) if d[i] < radius => base + opts.clearance_weight * (radius - d[i]) as f64 / radius as f64,
                _ => base,
            }
        };
        let mut time = vec![f64::INFINITY; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let s = window.local_index(seed);
        time[s] = 0.0;
        heap.push(HeapItem { cost: 0.0, index: s });
        while let Some(HeapItem { cost, index }) = heap.pop() {
            if done[index] || cost > time[index] {
                continue;
            }
            done[index] = true;
            let c = window.cell_of_local(index);
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let nb = c.offset(dx, dy);
                if !window.contains(nb) {
                    continue;
                }
                let j = window.local_index(nb);
                if done[j] {
                    continue;
                }
                let f = speed_cost(nb, j);
                if !f.is_finite() {
                    continue;
                }
                let t_at = |cell: Cell| -> f64 {
                    if window.contains(cell) {
                        time[window.local_index(cell)]
                    } else {
                        f64::INFINITY
                    }
                };
                let a = t_at(nb.offset(-1, 0)).min(t_at(nb.offset(1, 0)));
                let b = t_at(nb.offset(0, -1)).min(t_at(nb.offset(0, 1)));
                let t = if (a - b).abs() >= f || !a.is_finite() || !b.is_finite() {
                    a.min(b) + f
                } else {
                    (a + b + (2.0 * f * f - (a - b) * (a - b)).sqrt()) / 2.0
                };
                if t < time[j] {
                    time[j] = t;
                    heap.push(HeapItem { cost: t, index: j });
                }
            }
        }
        Some(Self { window, time, seed, resolution: grid.resolution() })
    }

    /// Arrival time at `c` in meters, `None` when unreachable or outside
    /// the solved window.
    pub fn get(&self, c: Cell) -> Option<f64> {
        if !self.window.contains(c) {
            return None;
        }
        let t = self.time[self.window.local_index(c)];
        t.is_finite().then_some(t * self.resolution)
    }

    pub fn seed(&self) -> Cell {
        self.seed
    }

    pub fn window(&self) -> Bounds {
        self.window
    }

    /// Steepest descent from `start` to the seed over 8-neighbours.
    pub fn descend(&self, grid: &OccupancyGrid, start: Cell) -> Option<Vec<Cell>> {
        let mut cur = start;
        let mut t = self.get(cur)?;
        let mut out = vec![cur];
        while cur != self.seed {
            let mut best: Option<(f64, Cell)> = None;
            for (dx, dy) in NEIGHBORS8 {
                let n = cur.offset(dx, dy);
                if !diagonal_ok(grid, cur, dx, dy) {
                    continue;
                }
                if let Some(tn) = self.get(n) {
                    if tn < t && best.is_none_or(|(bt, _)| tn < bt) {
                        best = Some((tn, n));
                    }
                }
            }
            let (tn, n) = best?;
            t = tn;
            cur = n;
            out.push(cur);
        }
        Some(out)
    }

    /// Arrival times as an 8-bit grayscale image (near = dark, unreachable =
    /// white), north up.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (w, h) = (self.window.width(), self.window.height());
        let max = self.time.iter().copied().filter(|t| t.is_finite()).fold(0.0, f64::max).max(1e-9);
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        for row in (0..h).rev() {
            for col in 0..w {
                let t = self.time[row * w + col];
                out.push(if t.is_finite() { (t / max * 254.0) as u8 } else { 255 });
            }
        }
        out
    }
}

/// Waypoints from start to goal.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Vec2>,
}

impl Path {
    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    pub fn goal(&self) -> Option<Vec2> {
        self.waypoints.last().copied()
    }
}

/// Plans with the default costs: unknown cells at twice the free cost and no
/// clearance penalty.
pub fn plan_path(grid: &OccupancyGrid, start: Vec2, goal: Vec2) -> Result<Path, PlanError> {
    plan_path_with(grid, start, goal, &PlanOptions::default())
}

/// Descends the arrival field from `start`, shortens the cell chain by line
/// of sight, and resamples it so consecutive waypoints are at most two cells
/// apart.
pub fn plan_path_with(grid: &OccupancyGrid, start: Vec2, goal: Vec2, opts: &PlanOptions) -> Result<Path, PlanError> {
    let s = snap_to_traversable(grid, start, SNAP_RADIUS_M).ok_or(PlanError::BadStart(start.x, start.y))?;
    let field = GeodesicField::compute(grid, goal, &[s], opts).ok_or(PlanError::Unreachable)?;
    path_from_field(grid, &field, start, goal, opts)
}

fn path_from_field(
    grid: &OccupancyGrid,
    field: &GeodesicField,
    start: Vec2,
    goal: Vec2,
    opts: &PlanOptions,
) -> Result<Path, PlanError> {
    let s = snap_to_traversable(grid, start, SNAP_RADIUS_M).ok_or(PlanError::BadStart(start.x, start.y))?;
    let cells = field.descend(grid, s).ok_or(PlanError::Unreachable)?;
    let goal = if grid.cell_at(goal) == Some(field.seed()) { goal } else { grid.center(field.seed()) };
    let mut chain = Vec::with_capacity(cells.len() + 1);
    chain.push(start);
    if cells.len() > 2 {
        chain.extend(cells[1..cells.len() - 1].iter().map(|c| grid.center(*c)));
    }
    chain.push(goal);
    let pulled = pull(grid, &chain, opts);
    let step = 2.0 * grid.resolution();
    let mut waypoints = vec![pulled[0]];
    for w in pulled.windows(2) {
        let n = (w[0].dist(w[1]) / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            waypoints.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    Ok(Path { waypoints })
}

/// Line-of-sight shortening. With a clearance penalty, shortcuts may not
/// pass closer to obstacles than the cells they replace.
fn pull(grid: &OccupancyGrid, points: &[Vec2], opts: &PlanOptions) -> Vec<Vec2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let margin = if opts.clearance_weight > 0.0 { (clearance_cells(opts, grid.resolution()) + 1) / 2 } else { 0 };
    let clear = |a: Vec2, b: Vec2| -> bool {
        if margin == 0 {
            return grid.segment_clear(a, b);
        }
        let d = b - a;
        let len = d.norm();
        if len == 0.0 {
            return true;
        }
        let mut ok = true;
        grid.traverse(a, d * (1.0 / len), len, |c, _| {
            for dy in -margin..=margin {
                for dx in -margin..=margin {
                    if grid.is_occupied(c.offset(dx, dy)) {
                        ok = false;
                        return false;
                    }
                }
            }
            true
        });
        ok
    };
    let mut out = vec![points[0]];
    let mut anchor = points[0];
    for i in 1..points.len() - 1 {
        if !clear(anchor, points[i + 1]) {
            anchor = points[i];
            out.push(anchor);
        }
    }
    out.push(*points.last().unwrap());
    out
}
