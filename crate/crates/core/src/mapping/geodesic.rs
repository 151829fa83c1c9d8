use super::grid::{Bounds, Cell, CellState, OccupancyGrid};
use crate::geometry::Vec2;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Endpoints inside an occupied cell are moved to the nearest traversable
/// cell within this radius.
pub const SNAP_RADIUS_M: f64 = 0.25;

/// Padding, in cells, around the known area that searches may enter.
const SEARCH_PAD: i32 = 20;

#[derive(Clone, Copy, PartialEq)]
pub(crate) struct HeapItem {
    pub cost: f64,
    pub index: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) const NEIGHBORS8: [(i32, i32); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];

/// Diagonal moves may not squeeze between two blocked orthogonal cells.
pub(crate) fn diagonal_ok(grid: &OccupancyGrid, c: Cell, dx: i32, dy: i32) -> bool {
    dx == 0 || dy == 0 || (!grid.is_occupied(c.offset(dx, 0)) && !grid.is_occupied(c.offset(0, dy)))
}

/// Search window: the known area plus the given cells, padded and clipped.
pub(crate) fn search_window(grid: &OccupancyGrid, extra: &[Cell]) -> Bounds {
    let mut b = grid.known_bounds().unwrap_or_else(|| Bounds::of_cell(extra[0]));
    for c in extra {
        b.include(*c);
    }
    grid.clip(b.expand(SEARCH_PAD))
}

pub fn snap_to_traversable(grid: &OccupancyGrid, p: Vec2, radius_m: f64) -> Option<Cell> {
    let c = grid.cell_at(p)?;
    if !grid.is_occupied(c) {
        return Some(c);
    }
    let r = (radius_m / grid.resolution()).ceil() as i32 + 1;
    let mut best: Option<(f64, Cell)> = None;
    for dy in -r..=r {
        for dx in -r..=r {
            let n = c.offset(dx, dy);
            if !grid.in_bounds(n) || grid.is_occupied(n) {
                continue;
            }
            let d = grid.center(n).dist(p);
            if d <= radius_m && best.is_none_or(|(bd, bc)| d < bd || (d == bd && (n.y, n.x) < (bc.y, bc.x))) {
                best = Some((d, n));
            }
        }
    }
    best.map(|(_, n)| n)
}

/// Shortest obstacle-avoiding path length between two points, in meters.
///
/// Unknown cells are traversable. The 8-connected grid path is shortened by
/// line-of-sight pulling, so in open space the result equals the Euclidean
/// distance. The computation is done in a canonical endpoint order, which
/// makes it exactly symmetric.
pub fn geodesic_distance(grid: &OccupancyGrid, a: Vec2, b: Vec2) -> Option<f64> {
    let (a, b) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
    let ca = snap_to_traversable(grid, a, SNAP_RADIUS_M)?;
    let cb = snap_to_traversable(grid, b, SNAP_RADIUS_M)?;
    let a = if grid.cell_at(a) == Some(ca) { a } else { grid.center(ca) };
    let b = if grid.cell_at(b) == Some(cb) { b } else { grid.center(cb) };
    if ca == cb {
        return Some(a.dist(b));
    }
    let cells = dijkstra_path(grid, ca, cb)?;
    let mut points = Vec::with_capacity(cells.len());
    points.push(a);
    points.extend(cells[1..cells.len() - 1].iter().map(|c| grid.center(*c)));
    points.push(b);
    let pulled = pull_string(grid, &points);
    Some(pulled.windows(2).map(|w| w[0].dist(w[1])).sum())
}

/// Greedy line-of-sight shortening of a polyline that never crosses an
/// occupied cell.
pub(crate) fn pull_string(grid: &OccupancyGrid, points: &[Vec2]) -> Vec<Vec2> {
    if points.len() <= 2 {
        return points.to_vec();
    }
    let mut out = vec![points[0]];
    let mut anchor = points[0];
    for i in 1..points.len() - 1 {
        if !grid.segment_clear(anchor, points[i + 1]) {
            anchor = points[i];
            out.push(anchor);
        }
    }
    out.push(*points.last().unwrap());
    out
}

fn dijkstra_path(grid: &OccupancyGrid, from: Cell, to: Cell) -> Option<Vec<Cell>> {
    let window = search_window(grid, &[from, to]);
    let n = window.area();
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let s = window.local_index(from);
    let goal = window.local_index(to);
    dist[s] = 0.0;
    heap.push(HeapItem { cost: 0.0, index: s });
    while let Some(HeapItem { cost, index }) = heap.pop() {
        if cost > dist[index] {
            continue;
        }
        if index == goal {
            break;
        }
        let c = window.cell_of_local(index);
        for (dx, dy) in NEIGHBORS8 {
            let nb = c.offset(dx, dy);
            if !window.contains(nb) || grid.is_occupied(nb) || !diagonal_ok(grid, c, dx, dy) {
                continue;
            }
            let step = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let j = window.local_index(nb);
            let nd = cost + step;
            if nd < dist[j] {
                dist[j] = nd;
                parent[j] = index;
                heap.push(HeapItem { cost: nd, index: j });
            }
        }
    }
    if !dist[goal].is_finite() {
        return None;
    }
    let mut path = vec![to];
    let mut i = goal;
    while i != s {
        i = parent[i];
        path.push(window.cell_of_local(i));
    }
    path.reverse();
    Some(path)
}

/// 8-connected path lengths (meters) from a source cell to every cell of a
/// search window. Unknown cells are traversable.
#[derive(Clone, Debug)]
pub struct DistanceField {
    window: Bounds,
    dist: Vec<f64>,
    resolution: f64,
}

impl DistanceField {
    pub fn get(&self, c: Cell) -> Option<f64> {
        if !self.window.contains(c) {
            return None;
        }
        let d = self.dist[self.window.local_index(c)];
        d.is_finite().then_some(d * self.resolution)
    }
}

pub fn distance_field(grid: &OccupancyGrid, source: Vec2) -> Option<DistanceField> {
    let src = snap_to_traversable(grid, source, SNAP_RADIUS_M)?;
    let window = search_window(grid, &[src]);
    let mut dist = vec![f64::INFINITY; window.area()];
    let mut heap = BinaryHeap::new();
    let s = window.local_index(src);
    dist[s] = 0.0;
    heap.push(HeapItem { cost: 0.0, index: s });
    while let Some(HeapItem { cost, index }) = heap.pop() {
        if cost > dist[index] {
            continue;
        }
        let c = window.cell_of_local(index);
        for (dx, dy) in NEIGHBORS8 {
            let nb = c.offset(dx, dy);
            if !window.contains(nb) || grid.get(nb) == Some(CellState::Occupied) || !diagonal_ok(grid, c, dx, dy) {
                continue;
            }
            let step = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
            let j = window.local_index(nb);
            if cost + step < dist[j] {
                dist[j] = cost + step;
                heap.push(HeapItem { cost: cost + step, index: j });
            }
        }
    }
    Some(DistanceField { window, dist, resolution: grid.resolution() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corridor_grid() -> OccupancyGrid {
        let mut g = OccupancyGrid::new(60, 60, 0.05, Vec2::default());
        for c in g.full_bounds().cells().collect::<Vec<_>>() {
            g.set(c, CellState::Occupied);
        }
        g
    }

    #[test]
    fn straight_corridor_matches_euclidean() {
        let mut g = corridor_grid();
        for x in 5..50 {
            g.set(Cell::new(x, 10), CellState::Free);
        }
        let a = g.center(Cell::new(10, 10));
        let b = g.center(Cell::new(19, 10));
        let d = geodesic_distance(&g, a, b).unwrap();
        assert!((d - 0.45).abs() < 1e-9, "{d}");
    }

    #[test]
    fn sealed_wall_is_unreachable() {
        let mut g = OccupancyGrid::new(30, 30, 0.05, Vec2::default());
        for c in g.full_bounds().cells().collect::<Vec<_>>() {
            g.set(c, if c.x == 15 { CellState::Occupied } else { CellState::Free });
        }
        assert!(geodesic_distance(&g, g.center(Cell::new(5, 5)), g.center(Cell::new(25, 5))).is_none());
    }

    #[test]
    fn l_shaped_corridor_sums_leg_lengths() {
        // one-cell corridor: (5,5) -> (40,5) -> (40,30)
        let mut g = corridor_grid();
        for x in 5..=40 {
            g.set(Cell::new(x, 5), CellState::Free);
        }
        for y in 5..=30 {
            g.set(Cell::new(40, y), CellState::Free);
        }
        let d = geodesic_distance(&g, g.center(Cell::new(5, 5)), g.center(Cell::new(40, 30))).unwrap();
        let legs = (35.0 + 25.0) * 0.05;
        assert!((d - legs).abs() <= 0.05 * std::f64::consts::SQRT_2, "{d} vs {legs}");
    }

    #[test]
    fn occupied_endpoint_snaps_or_fails() {
        let mut g = OccupancyGrid::new(40, 40, 0.05, Vec2::default());
        for c in g.full_bounds().cells().collect::<Vec<_>>() {
            g.set(c, CellState::Free);
        }
        g.set(Cell::new(10, 10), CellState::Occupied);
        let inside = g.center(Cell::new(10, 10));
        assert!(geodesic_distance(&g, inside, g.center(Cell::new(30, 10))).is_some());
        for y in 0..40 {
            for x in 0..40 {
                if (x as i32 - 10).abs() <= 8 && (y as i32 - 10).abs() <= 8 {
                    g.set(Cell::new(x, y), CellState::Occupied);
                }
            }
        }
        assert!(geodesic_distance(&g, inside, g.center(Cell::new(30, 30))).is_none());
    }

    #[test]
    fn distance_field_reports_path_lengths() {
        let mut g = OccupancyGrid::new(20, 20, 0.05, Vec2::default());
        for c in g.full_bounds().cells().collect::<Vec<_>>() {
            g.set(c, CellState::Free);
        }
        let f = distance_field(&g, g.center(Cell::new(0, 0))).unwrap();
        assert!((f.get(Cell::new(3, 0)).unwrap() - 0.15).abs() < 1e-12);
        assert!((f.get(Cell::new(2, 2)).unwrap() - 0.1 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }
}
