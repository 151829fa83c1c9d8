use super::fmm::{plan_path_with, GeodesicField, Path, PlanOptions};
use super::follow::{next_action, turn_toward, Action};
use crate::geometry::Vec2;
use crate::mapping::{CellState, OccupancyGrid, Pose, MIN_PERCEPTION_RANGE};

/// Observations are taken from this distance band around the candidate: no
/// closer than the sensor's minimum range, and within one step of it.
pub const OBSERVE_BAND_M: (f64, f64) = (MIN_PERCEPTION_RANGE, MIN_PERCEPTION_RANGE + 0.25);
/// Distance to an accepted goal at which the agent stops.
pub const STOP_RADIUS_M: f64 = 0.75;
/// Heading offsets, relative to facing the candidate, of successive
/// observations.
const VIEW_OFFSETS: [i32; 4] = [0, 30, 0, -30];
const REPLAN_EVERY: u32 = 8;
const MAX_TRAVEL_STEPS: u32 = 150;
const VIEWPOINT_BEARINGS: usize = 24;
/// Viewpoints need this much free space around them.
const VIEWPOINT_CLEARANCE_M: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproachStep {
    /// Execute the action; no observation is due.
    Travel(Action),
    /// The current frame is an observation of the candidate.
    Observe,
    /// Rotate to the next viewpoint; the following call yields `Observe`.
    Rotate(Action),
    /// All observations used up without a decision from the caller.
    Exhausted,
    /// The candidate cannot be reached.
    Unreachable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Travel,
    Observing,
    Final,
}

/// Drives the agent to a goal candidate, collects up to `n_max` views of it
/// rotating 30 degrees between views, and after [`Approach::accept`] walks in
/// and stops.
#[derive(Clone, Debug)]
pub struct Approach {
    target: Vec2,
    n_max: u32,
    opts: PlanOptions,
    phase: Phase,
    path: Option<Path>,
    since_plan: u32,
    travel_steps: u32,
    observations: u32,
    view: usize,
    observe_next: bool,
    /// Where the current travel path leads.
    goal: Vec2,
}

impl Approach {
    pub fn new(target: Vec2, n_max: u32, opts: PlanOptions) -> Self {
        Self {
            target,
            n_max,
            opts,
            phase: Phase::Travel,
            path: None,
            since_plan: 0,
            travel_steps: 0,
            observations: 0,
            view: 0,
            observe_next: false,
            goal: target,
        }
    }

    pub fn target(&self) -> Vec2 {
        self.target
    }

    pub fn observations(&self) -> u32 {
        self.observations
    }

    /// Drops the current path, e.g. after a collision.
    pub fn invalidate(&mut self) {
        self.path = None;
    }

    /// Switches to the final walk-in after a positive verdict.
    pub fn accept(&mut self) {
        self.phase = Phase::Final;
        self.path = None;
    }

    fn follow(&mut self, grid: &OccupancyGrid, pose: &Pose, goal: Vec2, stop: Option<f64>) -> Option<Action> {
        if self.path.is_none() || self.since_plan >= REPLAN_EVERY {
            self.path = plan_path_with(grid, pose.position, goal, &self.opts).ok();
            self.since_plan = 0;
        }
        let path = self.path.as_ref()?;
        self.since_plan += 1;
        Some(next_action(pose, &path.waypoints, stop))
    }

    /// Known-free spot in the observation band with a clear line of sight to
    /// the target, nearest to the agent along the map.
    fn viewpoint(&self, grid: &OccupancyGrid, pose: &Pose) -> Option<Vec2> {
        let field = GeodesicField::compute(grid, pose.position, &[], &self.opts)?;
        let (lo, hi) = OBSERVE_BAND_M;
        let pad = (VIEWPOINT_CLEARANCE_M / grid.resolution()).ceil() as i32;
        let mut best: Option<(f64, Vec2)> = None;
        for r in [lo + 0.05, (lo + hi) / 2.0, hi - 0.05] {
            for k in 0..VIEWPOINT_BEARINGS {
                let p = self.target + Vec2::from_angle_deg(360.0 * k as f64 / VIEWPOINT_BEARINGS as f64) * r;
                let Some(c) = grid.cell_at(p) else { continue };
                let roomy = (-pad..=pad).all(|dy| (-pad..=pad).all(|dx| grid.get(c.offset(dx, dy)) == Some(CellState::Free)));
                if !roomy || !grid.segment_clear(p, self.target) {
                    continue;
                }
                if let Some(t) = field.get(c) {
                    if best.is_none_or(|(bt, _)| t < bt) {
                        best = Some((t, p));
                    }
                }
            }
        }
        best.map(|(_, p)| p)
    }

    pub fn next(&mut self, grid: &OccupancyGrid, pose: &Pose) -> ApproachStep {
        let d = pose.position.dist(self.target);
        match self.phase {
            Phase::Final => match self.follow(grid, pose, self.target, Some(STOP_RADIUS_M)) {
                Some(a) => ApproachStep::Travel(a),
                None if d <= STOP_RADIUS_M => ApproachStep::Travel(Action::Stop),
                None => ApproachStep::Unreachable,
            },
            Phase::Travel => {
                let (lo, hi) = OBSERVE_BAND_M;
                if (lo..=hi).contains(&d) && grid.segment_clear(pose.position, self.target) {
                    if let Some(turn) = turn_toward(pose, self.target) {
                        return ApproachStep::Travel(turn);
                    }
                    self.phase = Phase::Observing;
                    self.observe_next = true;
                    return self.next(grid, pose);
                }
                self.travel_steps += 1;
                if self.travel_steps > MAX_TRAVEL_STEPS {
                    return ApproachStep::Unreachable;
                }
                if self.path.is_none() || self.since_plan >= REPLAN_EVERY {
                    self.goal = self.viewpoint(grid, pose).unwrap_or(self.target);
                }
                let goal = self.goal;
                match self.follow(grid, pose, goal, None) {
                    Some(Action::Stop) => {
                        self.path = None;
                        ApproachStep::Travel(turn_toward(pose, self.target).unwrap_or(Action::TurnLeft))
                    }
                    Some(a) => ApproachStep::Travel(a),
                    None => ApproachStep::Unreachable,
                }
            }
            Phase::Observing => {
                if self.observations >= self.n_max {
                    return ApproachStep::Exhausted;
                }
                if self.observe_next {
                    self.observe_next = false;
                    self.observations += 1;
                    return ApproachStep::Observe;
                }
                let cur = VIEW_OFFSETS[self.view % VIEW_OFFSETS.len()];
                self.view += 1;
                let next = VIEW_OFFSETS[self.view % VIEW_OFFSETS.len()];
                self.observe_next = true;
                ApproachStep::Rotate(if next > cur { Action::TurnLeft } else { Action::TurnRight })
            }
        }
    }
}
