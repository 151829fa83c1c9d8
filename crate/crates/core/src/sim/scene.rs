use super::catalog::{are_companions, room_spec, ROOMS};
use crate::geometry::{Segment, Vec2};
use crate::mapping::{Cell, CellState, OccupancyGrid, Pose};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

pub const SCENE_SCHEMA: &str = "scenenav.scene/1";
/// The world frame and the agent's map share this grid: 800 x 800 cells of 5 cm.
pub const GRID_CELLS: usize = 800;
pub const GRID_RESOLUTION: f64 = 0.05;
pub const WALL_THICKNESS_M: f64 = 0.1;
pub const DOOR_WIDTH_M: f64 = 1.0;
/// Truth relation thresholds between object centres in the same room.
pub const NEXT_TO_M: f64 = 1.0;
pub const NEAR_M: f64 = 3.0;

const LAYOUT_ORIGIN: Vec2 = Vec2::new(1.0, 1.0);
const ROOM_SIDE_DM: (u32, u32) = (40, 60);
const OBJECT_MARGIN_M: f64 = 0.6;
const MIN_SEPARATION_M: f64 = 0.6;
const PARTNER_RANGE_M: (f64, f64) = (0.6, 0.95);
const DOOR_MARGIN_M: f64 = 0.8;
const START_CLEARANCE_M: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SceneError {
    #[error("infeasible scene parameters: {0}")]
    Params(String),
    #[error("scene schema {0:?} is not {SCENE_SCHEMA:?}")]
    Schema(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("scene json: {0}")]
    Json(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub room_count: usize,
    pub objects_per_room: (usize, usize),
    /// Probability that a room other than the goal room holds one object
    /// the detector mistakes for the goal.
    pub false_positive_rate: f64,
    /// Probability that an object is placed beside an already placed object
    /// it usually accompanies.
    pub relation_density: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self { room_count: 4, objects_per_room: (4, 8), false_positive_rate: 0.0, relation_density: 0.8 }
    }
}

impl SceneParams {
    pub fn check(&self) -> Result<(), SceneError> {
        let err = |m: String| Err(SceneError::Params(m));
        if !(2..=ROOMS.len()).contains(&self.room_count) {
            return err(format!("room count {} outside 2..={}", self.room_count, ROOMS.len()));
        }
        let (lo, hi) = self.objects_per_room;
        if lo < 3 || hi > 10 || lo > hi {
            return err(format!("objects per room {lo}..={hi} outside 3..=10"));
        }
        for (name, p) in [("false positive rate", self.false_positive_rate), ("relation density", self.relation_density)] {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("{name} {p} outside [0, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub id: u32,
    pub room_type: String,
    /// Counter-clockwise vertices of the wall centre line.
    pub polygon: Vec<Vec2>,
}

impl Room {
    pub fn walls(&self) -> Vec<Segment> {
        let n = self.polygon.len();
        (0..n).map(|i| Segment::new(self.polygon[i], self.polygon[(i + 1) % n])).collect()
    }

    /// Inside the polygon (even-odd rule).
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        let n = self.polygon.len();
        for i in 0..n {
            let (a, b) = (self.polygon[i], self.polygon[(i + 1) % n]);
            if (a.y > p.y) != (b.y > p.y) && p.x < a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y) {
                inside = !inside;
            }
        }
        inside
    }

    /// Inside and clear of the walls.
    pub fn interior_contains(&self, p: Vec2) -> bool {
        self.contains(p) && self.walls().iter().all(|w| w.distance_to_point(p) > WALL_THICKNESS_M / 2.0)
    }

    pub fn bounds(&self) -> (Vec2, Vec2) {
        let min = self.polygon.iter().fold(Vec2::new(f64::MAX, f64::MAX), |m, p| Vec2::new(m.x.min(p.x), m.y.min(p.y)));
        let max = self.polygon.iter().fold(Vec2::new(f64::MIN, f64::MIN), |m, p| Vec2::new(m.x.max(p.x), m.y.max(p.y)));
        (min, max)
    }
}

/// Opening of [`DOOR_WIDTH_M`] in the wall shared by two rooms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Door {
    pub rooms: (u32, u32),
    pub a: Vec2,
    pub b: Vec2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub category: String,
    pub position: Vec2,
    /// Side of the square footprint, meters.
    pub size: f64,
    pub room: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TruthRelation {
    pub a: u32,
    pub b: u32,
    pub relation: String,
}

/// A real object that the detector labels as the goal category.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decoy {
    pub object: u32,
    pub apparent_category: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub schema: String,
    pub seed: u64,
    pub params: SceneParams,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    pub objects: Vec<SceneObject>,
    pub relations: Vec<TruthRelation>,
    pub decoys: Vec<Decoy>,
    pub goal_category: String,
    pub start: Pose,
}

/// Footprint side per category.
pub fn category_size(category: &str) -> f64 {
    match category {
        "bed" => 1.4,
        "sofa" | "couch" | "bathtub" | "piano" => 1.2,
        "dining table" | "table" | "desk" | "counter" | "wardrobe" | "closet" => 1.0,
        "refrigerator" | "freezer" | "shower" | "bookshelf" | "bookcase" | "fireplace" => 0.8,
        _ => 0.5,
    }
}

impl Scene {
    pub fn object(&self, id: u32) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn room(&self, id: u32) -> Option<&Room> {
        self.rooms.iter().find(|r| r.id == id)
    }

    /// Rooms whose polygon contains `p`.
    pub fn rooms_at(&self, p: Vec2) -> Vec<u32> {
        self.rooms.iter().filter(|r| r.contains(p)).map(|r| r.id).collect()
    }

    pub fn decoy(&self, object: u32) -> Option<&Decoy> {
        self.decoys.iter().find(|d| d.object == object)
    }

    /// Category the detector reports for an object.
    pub fn apparent_category(&self, object: &SceneObject) -> String {
        self.decoy(object.id).map(|d| d.apparent_category.clone()).unwrap_or_else(|| object.category.clone())
    }

    /// Ids of the real instances of `category`.
    pub fn instances(&self, category: &str) -> Vec<u32> {
        self.objects.iter().filter(|o| o.category == category).map(|o| o.id).collect()
    }

    pub fn goal_ids(&self) -> Vec<u32> {
        self.instances(&self.goal_category)
    }

    pub fn truth_relation(&self, a: u32, b: u32) -> Option<&str> {
        let (a, b) = (a.min(b), a.max(b));
        self.relations.iter().find(|r| r.a == a && r.b == b).map(|r| r.relation.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        let scene: Scene = serde_json::from_str(text).map_err(|e| SceneError::Json(e.to_string()))?;
        if scene.schema != SCENE_SCHEMA {
            return Err(SceneError::Schema(scene.schema));
        }
        scene.validate()?;
        Ok(scene)
    }

    /// Footprint cells of an object, clipped to its room's interior.
    pub fn footprint(&self, object: &SceneObject) -> Vec<Cell> {
        let room = self.room(object.room).expect("object room exists");
        let g = OccupancyGrid::new(GRID_CELLS, GRID_CELLS, GRID_RESOLUTION, Vec2::default());
        let h = object.size / 2.0;
        let (Some(lo), Some(hi)) =
            (g.cell_at(object.position - Vec2::new(h, h)), g.cell_at(object.position + Vec2::new(h, h)))
        else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for y in lo.y..=hi.y {
            for x in lo.x..=hi.x {
                let c = Cell::new(x, y);
                let p = g.center(c);
                if (p.x - object.position.x).abs() <= h && (p.y - object.position.y).abs() <= h && room.interior_contains(p) {
                    out.push(c);
                }
            }
        }
        if out.is_empty() {
            out.extend(g.cell_at(object.position));
        }
        out
    }

    /// Occupancy of the fully known world: walls and the outside are
    /// occupied, room interiors and door openings free. Objects do not block.
    pub fn truth_grid(&self) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(GRID_CELLS, GRID_CELLS, GRID_RESOLUTION, Vec2::default());
        let all: Vec<Cell> = g.full_bounds().cells().collect();
        for c in &all {
            g.set(*c, CellState::Occupied);
        }
        for room in &self.rooms {
            for c in room_cells(&g, room) {
                g.set(c, CellState::Free);
            }
        }
        for door in &self.doors {
            for c in door_cells(&g, door) {
                g.set(c, CellState::Free);
            }
        }
        g
    }

    /// Interior cells of each room, in room order.
    pub fn room_regions(&self) -> Vec<BTreeSet<Cell>> {
        let g = OccupancyGrid::new(GRID_CELLS, GRID_CELLS, GRID_RESOLUTION, Vec2::default());
        self.rooms.iter().map(|r| room_cells(&g, r).into_iter().collect()).collect()
    }

    /// Structural checks: every object inside exactly one room and that
    /// room is the one recorded, ids unique, the goal present, the start
    /// inside a room, decoys referring to non-goal objects.
    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: String| Err(SceneError::Invalid(m));
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id) {
                return bad(format!("duplicate object id {}", o.id));
            }
            let inside: Vec<u32> = self.rooms.iter().filter(|r| r.interior_contains(o.position)).map(|r| r.id).collect();
            if inside != [o.room] {
                return bad(format!("object {} ({}) lies in rooms {inside:?}, recorded {}", o.id, o.category, o.room));
            }
        }
        if self.goal_ids().is_empty() {
            return bad(format!("no instance of goal {:?}", self.goal_category));
        }
        if !self.rooms.iter().any(|r| r.interior_contains(self.start.position)) {
            return bad("start pose outside every room".into());
        }
        for d in &self.decoys {
            match self.object(d.object) {
                Some(o) if o.category != self.goal_category => {}
                _ => return bad(format!("decoy {} is not a non-goal object", d.object)),
            }
        }
        for r in &self.relations {
            if r.a >= r.b || self.object(r.a).is_none() || self.object(r.b).is_none() {
                return bad(format!("relation {r:?} refers to unknown or unordered ids"));
            }
        }
        Ok(())
    }
}

fn room_cells(g: &OccupancyGrid, room: &Room) -> Vec<Cell> {
    let (min, max) = room.bounds();
    let (Some(lo), Some(hi)) = (g.cell_at(min), g.cell_at(max)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for y in lo.y..=hi.y {
        for x in lo.x..=hi.x {
            let c = Cell::new(x, y);
            if room.interior_contains(g.center(c)) {
                out.push(c);
            }
        }
    }
    out
}

fn door_cells(g: &OccupancyGrid, door: &Door) -> Vec<Cell> {
    let seg = door.b - door.a;
    let len = seg.norm();
    let dir = seg * (1.0 / len);
    let normal = Vec2::new(-dir.y, dir.x);
    let pad = WALL_THICKNESS_M;
    let corners = [door.a - normal * pad, door.a + normal * pad, door.b - normal * pad, door.b + normal * pad];
    let min = corners.iter().fold(Vec2::new(f64::MAX, f64::MAX), |m, p| Vec2::new(m.x.min(p.x), m.y.min(p.y)));
    let max = corners.iter().fold(Vec2::new(f64::MIN, f64::MIN), |m, p| Vec2::new(m.x.max(p.x), m.y.max(p.y)));
    let (Some(lo), Some(hi)) = (g.cell_at(min), g.cell_at(max)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for y in lo.y..=hi.y {
        for x in lo.x..=hi.x {
            let c = Cell::new(x, y);
            let v = g.center(c) - door.a;
            let t = v.dot(dir);
            if t > 0.0 && t < len && v.dot(normal).abs() <= pad {
                out.push(c);
            }
        }
    }
    out
}

fn quantized(rng: &mut ChaCha8Rng, (lo, hi): (u32, u32)) -> f64 {
    rng.gen_range(lo..=hi) as f64 / 10.0
}

/// Builds a scene deterministically from `seed`.
///
/// Rooms are rectangles on a one- or two-row grid with distinct types. Every
/// pair of side-by-side rooms shares a door, and the rows are joined by at
/// least one. Each room holds its signature object with its companion
/// beside it, plus furniture; the goal is the signature object of one room
/// and the agent starts in another.
pub fn generate_scene(seed: u64, params: &SceneParams) -> Result<Scene, SceneError> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = params.room_count;
    let rows = if k <= 3 { 1 } else { 2 };
    let cols = k.div_ceil(rows);
    let widths: Vec<f64> = (0..cols).map(|_| quantized(&mut rng, ROOM_SIDE_DM)).collect();
    let heights: Vec<f64> = (0..rows).map(|_| quantized(&mut rng, ROOM_SIDE_DM)).collect();
    let mut types: Vec<&'static str> = ROOMS.iter().map(|r| r.room_type).collect();
    types.shuffle(&mut rng);

    let mut slots = Vec::new();
    let mut rooms = Vec::new();
    for i in 0..k {
        let (r, c) = (i / cols, i % cols);
        let x0 = LAYOUT_ORIGIN.x + widths[..c].iter().sum::<f64>();
        let y0 = LAYOUT_ORIGIN.y + heights[..r].iter().sum::<f64>();
        let (x1, y1) = (x0 + widths[c], y0 + heights[r]);
        rooms.push(Room {
            id: i as u32,
            room_type: types[i].to_string(),
            polygon: vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)],
        });
        slots.push((r, c));
    }
    let at = |r: usize, c: usize| slots.iter().position(|s| *s == (r, c));

    let mut doors = Vec::new();
    let mut door = |rng: &mut ChaCha8Rng, a: usize, b: usize, fixed: f64, lo: f64, hi: f64, vertical: bool| {
        let half = DOOR_WIDTH_M / 2.0;
        let centre = rng.gen_range(lo + DOOR_MARGIN_M + half..=hi - DOOR_MARGIN_M - half);
        let (p, q) = if vertical {
            (Vec2::new(fixed, centre - half), Vec2::new(fixed, centre + half))
        } else {
            (Vec2::new(centre - half, fixed), Vec2::new(centre + half, fixed))
        };
        doors.push(Door { rooms: (a as u32, b as u32), a: p, b: q });
    };
    for (i, &(r, c)) in slots.iter().enumerate() {
        if let Some(j) = at(r, c + 1) {
            let (min, max) = rooms[i].bounds();
            door(&mut rng, i, j, max.x, min.y, max.y, true);
        }
    }
    if rows == 2 {
        let shared: Vec<usize> = (0..cols).filter(|&c| at(1, c).is_some()).collect();
        let forced = *shared.choose(&mut rng).expect("second row is not empty");
        for c in shared {
            if c == forced || rng.gen_bool(0.5) {
                let (i, j) = (at(0, c).unwrap(), at(1, c).unwrap());
                let (min, max) = rooms[i].bounds();
                door(&mut rng, i, j, max.y, min.x, max.x, false);
            }
        }
    }

    let goal_room = rng.gen_range(0..k);
    let goal_category = room_spec(&rooms[goal_room].room_type).expect("catalog room").goal.to_string();

    let mut objects: Vec<SceneObject> = Vec::new();
    for room in &rooms {
        let spec = room_spec(&room.room_type).expect("catalog room");
        let (min, max) = room.bounds();
        let lo = min + Vec2::new(OBJECT_MARGIN_M, OBJECT_MARGIN_M);
        let hi = max - Vec2::new(OBJECT_MARGIN_M, OBJECT_MARGIN_M);
        let count = rng.gen_range(params.objects_per_room.0..=params.objects_per_room.1);
        let mut furniture: Vec<&str> = spec.furniture.to_vec();
        furniture.shuffle(&mut rng);
        let mut cats = vec![spec.goal, spec.companion];
        cats.extend(furniture.into_iter().take(count.saturating_sub(2)));
        let first = objects.len();
        for (n, cat) in cats.iter().enumerate() {
            let placed = &objects[first..];
            let partner = if n == 1 {
                Some(placed[0].position)
            } else if n > 1 && rng.gen_bool(params.relation_density) {
                let related: Vec<Vec2> =
                    placed.iter().filter(|o| are_companions(&o.category, cat)).map(|o| o.position).collect();
                related.choose(&mut rng).copied()
            } else {
                None
            };
            let ok = |p: Vec2| {
                p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && placed.iter().all(|o| o.position.dist(p) >= MIN_SEPARATION_M)
            };
            let mut spot = None;
            for attempt in 0..200 {
                let p = match partner {
                    Some(anchor) if attempt < 100 => {
                        let d = rng.gen_range(PARTNER_RANGE_M.0..=PARTNER_RANGE_M.1);
                        anchor + Vec2::from_angle_deg(rng.gen_range(0.0..360.0)) * d
                    }
                    _ => Vec2::new(rng.gen_range(lo.x..=hi.x), rng.gen_range(lo.y..=hi.y)),
                };
                if ok(p) {
                    spot = Some(p);
                    break;
                }
            }
            let Some(p) = spot else {
                if n < 2 {
                    return Err(SceneError::Params(format!("could not place {cat} in the {}", room.room_type)));
                }
                continue;
            };
            objects.push(SceneObject {
                id: objects.len() as u32,
                category: cat.to_string(),
                position: Vec2::new((p.x * 1000.0).round() / 1000.0, (p.y * 1000.0).round() / 1000.0),
                size: category_size(cat),
                room: room.id,
            });
        }
    }

    let mut relations = Vec::new();
    for (i, a) in objects.iter().enumerate() {
        for b in &objects[i + 1..] {
            if a.room != b.room {
                continue;
            }
            let d = a.position.dist(b.position);
            let rel = if d <= NEXT_TO_M {
                "next to"
            } else if d <= NEAR_M {
                "near"
            } else {
                continue;
            };
            relations.push(TruthRelation { a: a.id, b: b.id, relation: rel.into() });
        }
    }

    let mut decoys = Vec::new();
    for room in &rooms {
        if room.id as usize == goal_room || !rng.gen_bool(params.false_positive_rate) {
            continue;
        }
        let spec = room_spec(&room.room_type).expect("catalog room");
        let pool: Vec<u32> = objects
            .iter()
            .filter(|o| o.room == room.id && o.category != spec.goal && o.category != spec.companion)
            .map(|o| o.id)
            .collect();
        if let Some(id) = pool.choose(&mut rng) {
            decoys.push(Decoy { object: *id, apparent_category: goal_category.clone() });
        }
    }

    let start_rooms: Vec<usize> = (0..k).filter(|i| *i != goal_room).collect();
    let sr = &rooms[*start_rooms.choose(&mut rng).expect("at least two rooms")];
    let (min, max) = sr.bounds();
    let m = START_CLEARANCE_M + WALL_THICKNESS_M / 2.0;
    let p = Vec2::new(rng.gen_range(min.x + m..=max.x - m), rng.gen_range(min.y + m..=max.y - m));
    let start = Pose::new(
        Vec2::new((p.x * 1000.0).round() / 1000.0, (p.y * 1000.0).round() / 1000.0),
        rng.gen_range(0..12) * 30,
    );

    let scene = Scene {
        schema: SCENE_SCHEMA.into(),
        seed,
        params: params.clone(),
        rooms,
        doors,
        objects,
        relations,
        decoys,
        goal_category,
        start,
    };
    scene.validate()?;
    Ok(scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::geodesic_distance;

    fn params(k: usize, fp: f64) -> SceneParams {
        SceneParams { room_count: k, false_positive_rate: fp, ..SceneParams::default() }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_scene(7, &params(4, 0.5)).unwrap().to_json();
        let b = generate_scene(7, &params(4, 0.5)).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, generate_scene(8, &params(4, 0.5)).unwrap().to_json());
    }

    #[test]
    fn json_round_trip() {
        let s = generate_scene(3, &params(5, 0.3)).unwrap();
        assert_eq!(Scene::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn rejects_infeasible_params() {
        assert!(matches!(generate_scene(0, &params(7, 0.0)), Err(SceneError::Params(_))));
        assert!(matches!(generate_scene(0, &params(1, 0.0)), Err(SceneError::Params(_))));
        let p = SceneParams { objects_per_room: (2, 5), ..SceneParams::default() };
        assert!(matches!(generate_scene(0, &p), Err(SceneError::Params(_))));
    }

    #[test]
    fn rejects_wrong_schema() {
        let mut s = generate_scene(1, &params(2, 0.0)).unwrap();
        s.schema = "other/9".into();
        assert!(matches!(Scene::from_json(&s.to_json()), Err(SceneError::Schema(_))));
    }

    #[test]
    fn no_decoys_without_false_positive_rate() {
        for seed in 0..50 {
            assert!(generate_scene(seed, &params(6, 0.0)).unwrap().decoys.is_empty());
        }
    }

    #[test]
    fn every_object_in_exactly_one_room() {
        for seed in 0..1000 {
            let s = generate_scene(seed, &params(2 + (seed % 5) as usize, 0.2)).unwrap();
            for o in &s.objects {
                let n = s.rooms.iter().filter(|r| r.interior_contains(o.position)).count();
                assert_eq!(n, 1, "seed {seed} object {}", o.id);
            }
        }
    }

    #[test]
    fn truth_relations_follow_geometry() {
        let s = generate_scene(11, &params(3, 0.0)).unwrap();
        for (i, a) in s.objects.iter().enumerate() {
            for b in &s.objects[i + 1..] {
                let d = a.position.dist(b.position);
                let next_to = s.truth_relation(a.id, b.id) == Some("next to");
                assert_eq!(next_to, a.room == b.room && d <= NEXT_TO_M);
            }
        }
    }

    #[test]
    fn companions_sit_beside_the_goal() {
        for seed in 0..100 {
            let s = generate_scene(seed, &params(3, 0.0)).unwrap();
            let goal = s.object(s.goal_ids()[0]).unwrap();
            let companion = crate::sim::catalog::companion_of(&s.goal_category).unwrap();
            assert!(s.objects.iter().any(|o| o.category == companion && o.position.dist(goal.position) <= NEXT_TO_M));
        }
    }

    #[test]
    fn goal_reachable_and_start_elsewhere() {
        for seed in 0..20 {
            let s = generate_scene(seed, &params(2 + (seed % 5) as usize, 0.0)).unwrap();
            let g = s.truth_grid();
            let goal = s.object(s.goal_ids()[0]).unwrap();
            assert_ne!(s.rooms_at(s.start.position), vec![goal.room]);
            assert!(geodesic_distance(&g, s.start.position, goal.position).is_some(), "seed {seed}");
        }
    }

    #[test]
    fn walls_are_two_cells_thick() {
        let s = generate_scene(2, &params(2, 0.0)).unwrap();
        let g = s.truth_grid();
        let (min, max) = s.rooms[0].bounds();
        let row = g.cell_at(Vec2::new(min.x + 1.0, min.y + 0.3)).unwrap().y;
        let wall = (max.x / GRID_RESOLUTION).round() as i32;
        let occ = |x: i32| g.is_occupied(Cell::new(x, row));
        assert!(occ(wall - 1) && occ(wall) && !occ(wall - 2) && !occ(wall + 1));
    }
}
