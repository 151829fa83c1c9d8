use super::scene::{Scene, SceneObject, NEAR_M, NEXT_TO_M};
use crate::geometry::{wrap_deg, Vec2};
use crate::mapping::{geodesic_distance, Cell, DepthRay, DepthScan, OccupancyGrid, Pose, MAX_PERCEPTION_RANGE, MIN_PERCEPTION_RANGE};
use crate::planner::{apply_action, Action};
use crate::scene_graph::{Detection, RoomObservation, VlmBackend, VlmError, VlmQuery};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::sync::Arc;
use thiserror::Error;

pub const MAX_STEPS: u32 = 500;
pub const FOV_DEG: f64 = 90.0;
pub const DEPTH_RAYS: usize = 60;
/// Success radius around a true goal instance.
pub const SUCCESS_DISTANCE_M: f64 = 1.0;
/// Detection confidence is `BASE - FALLOFF * distance` plus uniform noise of
/// this half width.
pub const CONFIDENCE_BASE: f64 = 0.95;
pub const CONFIDENCE_FALLOFF_PER_M: f64 = 0.035;
pub const CONFIDENCE_NOISE: f64 = 0.05;
/// Within this range the detector sees that a decoy is not the goal and its
/// goal label drops to a low confidence.
pub const DECOY_REVEAL_RANGE_M: f64 = 3.0;
const DECOY_CLOSE_CONFIDENCE: (f64, f64) = (0.0, 0.04);
/// The agent's body: motion is blocked when the swept segment, extended by
/// this much, touches an occupied cell.
pub const AGENT_RADIUS_M: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("action {0} issued after the episode terminated")]
    Terminated(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stopped,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeState {
    pub pose: Pose,
    pub steps: u32,
    pub goal: String,
    pub trace: Vec<(Pose, Action)>,
    pub collisions: u32,
    pub terminated: Option<Termination>,
}

/// One detection with the hidden ground truth kept for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimDetection {
    pub detection: Detection,
    pub object: u32,
    pub injected_false_positive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub step: u32,
    pub pose: Pose,
    pub depth: DepthScan,
    pub detections: Vec<SimDetection>,
    pub rooms: Vec<RoomObservation>,
    pub collided: bool,
}

impl Observation {
    /// Scene objects seen together in this frame, as ordered id pairs.
    pub fn covisible_pairs(&self) -> Vec<(u32, u32)> {
        let ids: BTreeSet<u32> = self.detections.iter().map(|d| d.object).collect();
        let ids: Vec<u32> = ids.into_iter().collect();
        let mut out = Vec::new();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                out.push((*a, *b));
            }
        }
        out
    }
}

/// Deterministic per-event randomness: the same seed and key always give
/// the same stream, whatever happened before.
fn event_rng(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for k in key {
        h.update(k.to_le_bytes());
    }
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(bytes)
}

pub struct World {
    scene: Scene,
    truth: OccupancyGrid,
    regions: Vec<Arc<BTreeSet<Cell>>>,
    footprints: Vec<Vec<Cell>>,
    state: EpisodeState,
}

impl World {
    pub fn new(scene: Scene) -> Self {
        let truth = scene.truth_grid();
        let regions = scene.room_regions().into_iter().map(Arc::new).collect();
        let footprints = scene.objects.iter().map(|o| scene.footprint(o)).collect();
        let state = EpisodeState {
            pose: scene.start,
            steps: 0,
            goal: scene.goal_category.clone(),
            trace: Vec::new(),
            collisions: 0,
            terminated: None,
        };
        Self { scene, truth, regions, footprints, state }
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn truth(&self) -> &OccupancyGrid {
        &self.truth
    }

    pub fn state(&self) -> &EpisodeState {
        &self.state
    }

    /// Whether the object centre passes the range, field-of-view and
    /// occlusion tests from `pose`.
    pub fn visible(&self, pose: &Pose, object: &SceneObject) -> bool {
        let d = pose.position.dist(object.position);
        if !(MIN_PERCEPTION_RANGE..=MAX_PERCEPTION_RANGE).contains(&d) {
            return false;
        }
        let bearing = wrap_deg((object.position - pose.position).angle_deg() - pose.heading_deg as f64);
        bearing.abs() <= FOV_DEG / 2.0 && self.truth.segment_clear(pose.position, object.position)
    }

    fn depth_scan(&self, pose: &Pose) -> DepthScan {
        let rays = (0..DEPTH_RAYS)
            .map(|i| {
                let bearing = FOV_DEG / 2.0 - FOV_DEG * i as f64 / (DEPTH_RAYS - 1) as f64;
                let dir = Vec2::from_angle_deg(pose.heading_deg as f64 + bearing);
                let mut range = None;
                self.truth.traverse(pose.position, dir, MAX_PERCEPTION_RANGE, |c, t| {
                    if self.truth.is_occupied(c) {
                        range = Some(t);
                        false
                    } else {
                        true
                    }
                });
                DepthRay { bearing_deg: bearing, range }
            })
            .collect();
        DepthScan { rays, max_range: MAX_PERCEPTION_RANGE }
    }

    fn confidence(&self, object: &SceneObject, d: f64) -> f64 {
        let mut rng = event_rng(self.scene.seed, &[self.state.steps as u64, object.id as u64]);
        let c = if self.scene.decoy(object.id).is_some() && d <= DECOY_REVEAL_RANGE_M {
            rng.gen_range(DECOY_CLOSE_CONFIDENCE.0..=DECOY_CLOSE_CONFIDENCE.1)
        } else {
            CONFIDENCE_BASE - CONFIDENCE_FALLOFF_PER_M * d + rng.gen_range(-CONFIDENCE_NOISE..=CONFIDENCE_NOISE)
        };
        c.clamp(0.0, 1.0)
    }

    /// Current frame without acting.
    pub fn observe(&self, collided: bool) -> Observation {
        let pose = self.state.pose;
        let mut detections = Vec::new();
        let mut rooms: BTreeSet<u32> = self.scene.rooms_at(pose.position).into_iter().collect();
        for (o, fp) in self.scene.objects.iter().zip(&self.footprints) {
            if !self.visible(&pose, o) {
                continue;
            }
            let d = pose.position.dist(o.position);
            rooms.insert(o.room);
            detections.push(SimDetection {
                detection: Detection {
                    category: self.scene.apparent_category(o),
                    confidence: self.confidence(o, d),
                    centroid: o.position,
                    footprint: fp.clone(),
                },
                object: o.id,
                injected_false_positive: self.scene.decoy(o.id).is_some(),
            });
        }
        let rooms = rooms
            .into_iter()
            .filter_map(|id| {
                let idx = self.scene.rooms.iter().position(|r| r.id == id)?;
                let r = &self.scene.rooms[idx];
                Some(RoomObservation {
                    key: r.id,
                    room_type: r.room_type.clone(),
                    region: Arc::clone(&self.regions[idx]),
                    walls: r.walls(),
                })
            })
            .collect();
        Observation { step: self.state.steps, pose, depth: self.depth_scan(&pose), detections, rooms, collided }
    }

    fn blocked(&self, from: Vec2, to: Vec2) -> bool {
        let d = to - from;
        let len = d.norm();
        let end = to + d * (AGENT_RADIUS_M / len);
        !self.truth.segment_clear(from, end)
    }

    /// Applies `action` and returns the resulting frame. Forward motion into
    /// an obstacle leaves the pose unchanged and reports a collision. The
    /// episode terminates on `Stop` or when the step budget runs out.
    pub fn step(&mut self, action: Action) -> Result<Observation, SimError> {
        if self.state.terminated.is_some() {
            return Err(SimError::Terminated(action.as_str()));
        }
        let before = self.state.pose;
        let mut next = apply_action(&before, action);
        let mut collided = false;
        if action == Action::MoveForward && self.blocked(before.position, next.position) {
            next = before;
            collided = true;
            self.state.collisions += 1;
        }
        self.state.pose = next;
        self.state.steps += 1;
        self.state.trace.push((before, action));
        if action == Action::Stop {
            self.state.terminated = Some(Termination::Stopped);
        } else if self.state.steps >= MAX_STEPS {
            self.state.terminated = Some(Termination::BudgetExhausted);
        }
        Ok(self.observe(collided))
    }

    /// Geodesic distance on the true map from `p` to the nearest real goal
    /// instance.
    pub fn distance_to_goal(&self, p: Vec2) -> Option<f64> {
        self.scene
            .goal_ids()
            .iter()
            .filter_map(|id| geodesic_distance(&self.truth, p, self.scene.object(*id)?.position))
            .min_by(f64::total_cmp)
    }

    pub fn check_success(&self, success_distance: f64) -> bool {
        check_success(&self.state, self.distance_to_goal(self.state.pose.position), success_distance)
    }
}

/// Stopped within budget and within `success_distance` (geodesic) of a real
/// goal instance. Decoys never count.
pub fn check_success(state: &EpisodeState, goal_distance: Option<f64>, success_distance: f64) -> bool {
    state.terminated == Some(Termination::Stopped)
        && state.steps <= MAX_STEPS
        && goal_distance.is_some_and(|d| d <= success_distance)
}

/// Relation checker that answers from the scene's ground truth. Objects are
/// matched by the category the detector reported and the nearest position.
/// An optional error rate flips answers deterministically per query.
pub struct GroundTruthVlm {
    scene: Scene,
    error_rate: f64,
}

impl GroundTruthVlm {
    pub fn new(scene: Scene) -> Self {
        Self { scene, error_rate: 0.0 }
    }

    pub fn with_error_rate(mut self, rate: f64) -> Self {
        self.error_rate = rate.clamp(0.0, 1.0);
        self
    }

    fn locate(&self, category: &str, p: Vec2) -> Option<&SceneObject> {
        self.scene
            .objects
            .iter()
            .filter(|o| self.scene.apparent_category(o) == category && o.position.dist(p) <= NEXT_TO_M)
            .min_by(|a, b| a.position.dist(p).total_cmp(&b.position.dist(p)))
    }
}

impl VlmBackend for GroundTruthVlm {
    fn affirm(&self, q: &VlmQuery) -> Result<bool, VlmError> {
        let (Some(a), Some(b)) = (self.locate(&q.subject, q.subject_position), self.locate(&q.object, q.object_position))
        else {
            return Ok(false);
        };
        let d = a.position.dist(b.position);
        let truth = a.room == b.room
            && match q.relation.as_str() {
                "next to" => d <= NEXT_TO_M,
                "near" => d <= NEAR_M,
                _ => true,
            };
        if self.error_rate > 0.0 {
            let mut rng = event_rng(self.scene.seed, &[u64::MAX, q.frame as u64, a.id as u64, b.id as u64]);
            if rng.gen_bool(self.error_rate) {
                return Ok(!truth);
            }
        }
        Ok(truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_scene, SceneParams};

    fn world(seed: u64, fp: f64) -> World {
        World::new(generate_scene(seed, &SceneParams { false_positive_rate: fp, ..SceneParams::default() }).unwrap())
    }

    #[test]
    fn twelve_left_turns_come_back() {
        let mut w = world(1, 0.0);
        let h = w.state().pose.heading_deg;
        for _ in 0..12 {
            w.step(Action::TurnLeft).unwrap();
        }
        assert_eq!(w.state().pose.heading_deg, h);
        assert_eq!(w.state().trace.len(), 12);
    }

    #[test]
    fn forward_into_wall_collides() {
        let mut w = world(2, 0.0);
        let room = &w.scene().rooms[w.scene().rooms_at(w.scene().start.position)[0] as usize];
        let (min, _) = room.bounds();
        w.state.pose = Pose::new(Vec2::new(min.x + 0.15, w.scene().start.position.y), 180);
        let before = w.state().pose;
        let obs = w.step(Action::MoveForward).unwrap();
        assert!(obs.collided);
        assert_eq!(w.state().pose, before);
        assert_eq!(w.state().collisions, 1);
    }

    #[test]
    fn acting_after_stop_is_a_fault() {
        let mut w = world(3, 0.0);
        w.step(Action::Stop).unwrap();
        assert_eq!(w.step(Action::TurnLeft), Err(SimError::Terminated("turn_left")));
    }

    #[test]
    fn budget_exhausts_at_500() {
        let mut w = world(4, 0.0);
        for _ in 0..MAX_STEPS {
            w.step(Action::TurnLeft).unwrap();
        }
        assert_eq!(w.state().terminated, Some(Termination::BudgetExhausted));
        assert!(!w.check_success(SUCCESS_DISTANCE_M));
    }

    #[test]
    fn detections_pass_visibility() {
        for seed in 0..10 {
            let mut w = world(seed, 0.5);
            for _ in 0..12 {
                let obs = w.step(Action::TurnLeft).unwrap();
                for d in &obs.detections {
                    let o = w.scene().object(d.object).unwrap();
                    assert!(w.visible(&obs.pose, o));
                    assert!((0.0..=1.0).contains(&d.detection.confidence));
                }
            }
        }
    }

    #[test]
    fn far_objects_are_not_detected() {
        let w = world(5, 0.0);
        let mut o = w.scene().objects[0].clone();
        let pose = w.state().pose;
        o.position = pose.position + pose.direction() * 12.0;
        assert!(!w.visible(&pose, &o));
    }

    #[test]
    fn same_actions_same_observations() {
        let run = || {
            let mut w = world(6, 0.5);
            (0..20)
                .map(|i| {
                    let a = if i % 3 == 0 { Action::TurnRight } else { Action::MoveForward };
                    let o = w.step(a).unwrap();
                    (o.pose, o.detections.iter().map(|d| (d.object, d.detection.confidence)).collect::<Vec<_>>())
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn injected_flags_only_with_decoys() {
        let mut w = world(7, 0.0);
        for _ in 0..12 {
            assert!(w.step(Action::TurnLeft).unwrap().detections.iter().all(|d| !d.injected_false_positive));
        }
    }

    #[test]
    fn stop_near_goal_succeeds_and_near_decoy_fails() {
        let scene = (0..200)
            .map(|s| generate_scene(s, &SceneParams { false_positive_rate: 1.0, ..SceneParams::default() }).unwrap())
            .find(|s| !s.decoys.is_empty())
            .unwrap();
        let goal = scene.object(scene.goal_ids()[0]).unwrap().position;
        let decoy = scene.object(scene.decoys[0].object).unwrap().position;
        let mut w = World::new(scene.clone());
        w.state.pose = Pose::new(goal + Vec2::new(0.8, 0.0), 180);
        w.step(Action::Stop).unwrap();
        assert!(w.check_success(SUCCESS_DISTANCE_M));
        let mut w = World::new(scene);
        w.state.pose = Pose::new(decoy + Vec2::new(0.0, 0.8), 0);
        w.step(Action::Stop).unwrap();
        assert!(!w.check_success(SUCCESS_DISTANCE_M));
    }

    #[test]
    fn covisibility_is_pairwise_membership() {
        let obs = Observation {
            step: 0,
            pose: Pose::new(Vec2::default(), 0),
            depth: DepthScan::default(),
            detections: [4, 1, 9]
                .iter()
                .map(|id| SimDetection {
                    detection: Detection { category: "x".into(), confidence: 1.0, centroid: Vec2::default(), footprint: vec![] },
                    object: *id,
                    injected_false_positive: false,
                })
                .collect(),
            rooms: vec![],
            collided: false,
        };
        assert_eq!(obs.covisible_pairs(), vec![(1, 4), (1, 9), (4, 9)]);
    }

    #[test]
    fn ground_truth_vlm_checks_next_to() {
        let scene = generate_scene(8, &SceneParams::default()).unwrap();
        let goal = scene.object(scene.goal_ids()[0]).unwrap().clone();
        let companion = crate::sim::catalog::companion_of(&goal.category).unwrap();
        let comp = scene.objects.iter().find(|o| o.category == companion && o.room == goal.room).unwrap().clone();
        let vlm = GroundTruthVlm::new(scene);
        let q = |rel: &str| VlmQuery {
            frame: 0,
            subject: goal.category.clone(),
            subject_position: goal.position,
            object: comp.category.clone(),
            object_position: comp.position,
            relation: rel.into(),
        };
        assert_eq!(vlm.affirm(&q("next to")), Ok(true));
        let mut wrong = q("next to");
        wrong.object = "spaceship".into();
        assert_eq!(vlm.affirm(&wrong), Ok(false));
    }
}
