use crate::geometry::Vec2;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Cell {
        Cell::new(self.x + dx, self.y + dy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Unknown,
    Free,
    Occupied,
}

impl CellState {
    fn symbol(self) -> char {
        match self {
            CellState::Unknown => '?',
            CellState::Free => '.',
            CellState::Occupied => '#',
        }
    }
}

/// Inclusive rectangle of cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Cell,
    pub max: Cell,
}

impl Bounds {
    pub fn of_cell(c: Cell) -> Self {
        Self { min: c, max: c }
    }

    pub fn include(&mut self, c: Cell) {
        self.min.x = self.min.x.min(c.x);
        self.min.y = self.min.y.min(c.y);
        self.max.x = self.max.x.max(c.x);
        self.max.y = self.max.y.max(c.y);
    }

    pub fn union(mut self, other: Bounds) -> Bounds {
        self.include(other.min);
        self.include(other.max);
        self
    }

    pub fn expand(self, pad: i32) -> Bounds {
        Bounds { min: self.min.offset(-pad, -pad), max: self.max.offset(pad, pad) }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.min.x && c.x <= self.max.x && c.y >= self.min.y && c.y <= self.max.y
    }

    pub fn width(&self) -> usize {
        (self.max.x - self.min.x + 1).max(0) as usize
    }

    pub fn height(&self) -> usize {
        (self.max.y - self.min.y + 1).max(0) as usize
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// Row-major index of `c` inside the rectangle.
    pub fn local_index(&self, c: Cell) -> usize {
        (c.y - self.min.y) as usize * self.width() + (c.x - self.min.x) as usize
    }

    pub fn cell_of_local(&self, i: usize) -> Cell {
        let w = self.width();
        Cell::new(self.min.x + (i % w) as i32, self.min.y + (i / w) as i32)
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (self.min.y..=self.max.y).flat_map(move |y| (self.min.x..=self.max.x).map(move |x| Cell::new(x, y)))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridParseError {
    #[error("missing or malformed grid header")]
    Header,
    #[error("row {row} has {found} cells, expected {expected}")]
    RowWidth { row: usize, found: usize, expected: usize },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("unexpected cell symbol {0:?}")]
    Symbol(char),
}

/// 2D BEV occupancy grid. Cell `(0, 0)` has its lower-left corner at `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: Vec2,
    cells: Vec<CellState>,
    known: Option<Bounds>,
    unknown: usize,
}

impl Default for OccupancyGrid {
    /// 800 x 800 cells at 0.05 m, i.e. a 40 m x 40 m area.
    fn default() -> Self {
        Self::new(800, 800, 0.05, Vec2::new(0.0, 0.0))
    }
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64, origin: Vec2) -> Self {
        assert!(width > 0 && height > 0 && resolution > 0.0, "degenerate grid");
        Self {
            width,
            height,
            resolution,
            origin,
            cells: vec![CellState::Unknown; width * height],
            known: None,
            unknown: width * height,
        }
    }

    /// Same geometry as `self`, every cell unknown.
    pub fn blank_like(&self) -> Self {
        Self::new(self.width, self.height, self.resolution, self.origin)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn full_bounds(&self) -> Bounds {
        Bounds { min: Cell::new(0, 0), max: Cell::new(self.width as i32 - 1, self.height as i32 - 1) }
    }

    /// Bounding box of every cell that is not unknown.
    pub fn known_bounds(&self) -> Option<Bounds> {
        self.known
    }

    pub fn clip(&self, b: Bounds) -> Bounds {
        let f = self.full_bounds();
        Bounds {
            min: Cell::new(b.min.x.clamp(0, f.max.x), b.min.y.clamp(0, f.max.y)),
            max: Cell::new(b.max.x.clamp(0, f.max.x), b.max.y.clamp(0, f.max.y)),
        }
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && (c.x as usize) < self.width && (c.y as usize) < self.height
    }

    fn index(&self, c: Cell) -> usize {
        c.y as usize * self.width + c.x as usize
    }

    pub fn cell_at(&self, p: Vec2) -> Option<Cell> {
        let u = (p.x - self.origin.x) / self.resolution;
        let v = (p.y - self.origin.y) / self.resolution;
        if !u.is_finite() || !v.is_finite() {
            return None;
        }
        let c = Cell::new(u.floor() as i32, v.floor() as i32);
        self.in_bounds(c).then_some(c)
    }

    pub fn center(&self, c: Cell) -> Vec2 {
        Vec2::new(
            self.origin.x + (c.x as f64 + 0.5) * self.resolution,
            self.origin.y + (c.y as f64 + 0.5) * self.resolution,
        )
    }

    pub fn get(&self, c: Cell) -> Option<CellState> {
        self.in_bounds(c).then(|| self.cells[self.index(c)])
    }

    pub fn is_occupied(&self, c: Cell) -> bool {
        self.get(c) == Some(CellState::Occupied)
    }

    /// Unconditional write, used to build ground-truth and test maps.
    pub fn set(&mut self, c: Cell, state: CellState) -> bool {
        if !self.in_bounds(c) {
            return false;
        }
        let i = self.index(c);
        let old = self.cells[i];
        if old == state {
            return false;
        }
        if old == CellState::Unknown {
            self.unknown -= 1;
        }
        if state == CellState::Unknown {
            self.unknown += 1;
        } else {
            match &mut self.known {
                Some(b) => b.include(c),
                None => self.known = Some(Bounds::of_cell(c)),
            }
        }
        self.cells[i] = state;
        true
    }

    /// Marks a cell free unless it is already known. Occupied cells never revert.
    pub fn mark_free(&mut self, c: Cell) -> bool {
        match self.get(c) {
            Some(CellState::Unknown) => self.set(c, CellState::Free),
            _ => false,
        }
    }

    pub fn mark_occupied(&mut self, c: Cell) -> bool {
        self.set(c, CellState::Occupied)
    }

    pub fn count(&self, state: CellState) -> usize {
        match state {
            CellState::Unknown => self.unknown,
            _ => self.cells.iter().filter(|s| **s == state).count(),
        }
    }

    pub fn unknown_count(&self) -> usize {
        self.unknown
    }

    pub fn neighbors4(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        [(1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .map(move |(dx, dy)| c.offset(dx, dy))
            .filter(move |n| self.in_bounds(*n))
    }

    /// Free cell with at least one unknown 4-neighbour.
    pub fn is_frontier_cell(&self, c: Cell) -> bool {
        self.get(c) == Some(CellState::Free) && self.neighbors4(c).any(|n| self.get(n) == Some(CellState::Unknown))
    }

    /// Walks the cells pierced by the ray `start + t * dir` for `t` in `[0, max_t]`.
    ///
    /// `visit` receives each cell with the ray parameter at which it is
    /// entered and returns `false` to stop. `dir` must be a unit vector.
    pub fn traverse(&self, start: Vec2, dir: Vec2, max_t: f64, mut visit: impl FnMut(Cell, f64) -> bool) {
        let res = self.resolution;
        let u = (start.x - self.origin.x) / res;
        let v = (start.y - self.origin.y) / res;
        let mut cell = Cell::new(u.floor() as i32, v.floor() as i32);
        let step_x = if dir.x > 0.0 { 1 } else { -1 };
        let step_y = if dir.y > 0.0 { 1 } else { -1 };
        let next_boundary = |pos: f64, idx: i32, step: i32| -> f64 {
            if step > 0 {
                (idx + 1) as f64 - pos
            } else {
                pos - idx as f64
            }
        };
        let (mut t_max_x, t_delta_x) = if dir.x.abs() < 1e-12 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (next_boundary(u, cell.x, step_x) * res / dir.x.abs(), res / dir.x.abs())
        };
        let (mut t_max_y, t_delta_y) = if dir.y.abs() < 1e-12 {
            (f64::INFINITY, f64::INFINITY)
        } else {
            (next_boundary(v, cell.y, step_y) * res / dir.y.abs(), res / dir.y.abs())
        };
        let mut t = 0.0;
        while t <= max_t && self.in_bounds(cell) {
            if !visit(cell, t) {
                return;
            }
            if t_max_x < t_max_y {
                t = t_max_x;
                t_max_x += t_delta_x;
                cell.x += step_x;
            } else {
                t = t_max_y;
                t_max_y += t_delta_y;
                cell.y += step_y;
            }
        }
    }

    /// True if the straight segment `a -> b` crosses no occupied cell.
    pub fn segment_clear(&self, a: Vec2, b: Vec2) -> bool {
        let len = a.dist(b);
        if len < 1e-12 {
            return !self.cell_at(a).is_some_and(|c| self.is_occupied(c));
        }
        let dir = (b - a) * (1.0 / len);
        let mut clear = true;
        self.traverse(a, dir, len, |c, _| {
            clear = !self.is_occupied(c);
            clear
        });
        clear
    }

    /// Binary PGM (P5). Unknown is gray, free white, occupied black. Row 0 of
    /// the image is the highest `y` row, so the image is north-up.
    pub fn to_pgm(&self) -> Vec<u8> {
        self.to_pgm_window(self.full_bounds())
    }

    pub fn to_pgm_window(&self, window: Bounds) -> Vec<u8> {
        let w = self.clip(window);
        let mut out = format!("P5\n{} {}\n255\n", w.width(), w.height()).into_bytes();
        for y in (w.min.y..=w.max.y).rev() {
            for x in w.min.x..=w.max.x {
                out.push(match self.cells[self.index(Cell::new(x, y))] {
                    CellState::Unknown => 128,
                    CellState::Free => 255,
                    CellState::Occupied => 0,
                });
            }
        }
        out
    }

    /// Exact text dump: a header line then one line per row, row 0 first,
    /// using `?` unknown, `.` free, `#` occupied.
    pub fn dump_text(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height + 64);
        let _ = writeln!(
            s,
            "grid {} {} {} {} {}",
            self.width, self.height, self.resolution, self.origin.x, self.origin.y
        );
        for y in 0..self.height {
            let row = &self.cells[y * self.width..(y + 1) * self.width];
            s.extend(row.iter().map(|c| c.symbol()));
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, GridParseError> {
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or(GridParseError::Header)?.split_whitespace().collect();
        if header.len() != 6 || header[0] != "grid" {
            return Err(GridParseError::Header);
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| GridParseError::Header);
        let width: usize = header[1].parse().map_err(|_| GridParseError::Header)?;
        let height: usize = header[2].parse().map_err(|_| GridParseError::Header)?;
        if width == 0 || height == 0 {
            return Err(GridParseError::Header);
        }
        let mut grid = Self::new(width, height, num(header[3])?, Vec2::new(num(header[4])?, num(header[5])?));
        let mut rows = 0;
        for (y, line) in lines.enumerate() {
            if y >= height {
                return Err(GridParseError::RowCount { expected: height, found: y + 1 });
            }
            let found = line.chars().count();
            if found != width {
                return Err(GridParseError::RowWidth { row: y, found, expected: width });
            }
            for (x, ch) in line.chars().enumerate() {
                let state = match ch {
                    '?' => CellState::Unknown,
                    '.' => CellState::Free,
                    '#' => CellState::Occupied,
                    other => return Err(GridParseError::Symbol(other)),
                };
                grid.set(Cell::new(x as i32, y as i32), state);
            }
            rows += 1;
        }
        if rows != height {
            return Err(GridParseError::RowCount { expected: height, found: rows });
        }
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_covers_forty_meters() {
        let g = OccupancyGrid::default();
        assert_eq!((g.width(), g.height()), (800, 800));
        assert!((g.width() as f64 * g.resolution() - 40.0).abs() < 1e-9);
        assert_eq!(g.unknown_count(), 640_000);
        assert!(g.known_bounds().is_none());
    }

    #[test]
    fn occupied_never_reverts_through_mark_free() {
        let mut g = OccupancyGrid::new(4, 4, 0.05, Vec2::default());
        let c = Cell::new(1, 2);
        assert!(g.mark_occupied(c));
        assert!(!g.mark_free(c));
        assert_eq!(g.get(c), Some(CellState::Occupied));
        assert_eq!(g.unknown_count(), 15);
    }

    #[test]
    fn text_dump_round_trips() {
        let mut g = OccupancyGrid::new(3, 2, 0.05, Vec2::new(1.0, -2.0));
        g.set(Cell::new(0, 0), CellState::Free);
        g.set(Cell::new(2, 1), CellState::Occupied);
        let text = g.dump_text();
        assert_eq!(text, "grid 3 2 0.05 1 -2\n.??\n??#\n");
        assert_eq!(OccupancyGrid::parse_text(&text).unwrap(), g);
    }

    #[test]
    fn pgm_uses_three_gray_levels() {
        let mut g = OccupancyGrid::new(2, 1, 0.05, Vec2::default());
        g.set(Cell::new(0, 0), CellState::Free);
        g.set(Cell::new(1, 0), CellState::Occupied);
        let pgm = g.to_pgm();
        assert_eq!(&pgm[..11], b"P5\n2 1\n255\n");
        assert_eq!(&pgm[11..], &[255, 0]);
    }

    #[test]
    fn traverse_visits_cells_in_order() {
        let g = OccupancyGrid::new(10, 10, 1.0, Vec2::default());
        let mut seen = vec![];
        g.traverse(Vec2::new(0.5, 0.5), Vec2::new(1.0, 0.0), 3.0, |c, t| {
            seen.push((c, t));
            true
        });
        assert_eq!(seen.iter().map(|(c, _)| c.x).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert!((seen[1].1 - 0.5).abs() < 1e-12);
    }
}
