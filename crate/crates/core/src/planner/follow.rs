use crate::geometry::{wrap_deg, Vec2};
use crate::mapping::Pose;
use serde::{Deserialize, Serialize};

/// Distance covered by one forward step.
pub const STEP_LENGTH_M: f64 = 0.25;
/// Rotation of one turn.
pub const TURN_DEG: i32 = 30;
/// Bearing error tolerated before turning; half a turn, so the agent never
/// oscillates around a target.
pub const HEADING_DEADBAND_DEG: f64 = 15.0;
/// Waypoints nearer than this are skipped when picking the one to steer at.
pub const LOOKAHEAD_M: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    MoveForward,
    TurnLeft,
    TurnRight,
    Stop,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::MoveForward => "move_forward",
            Action::TurnLeft => "turn_left",
            Action::TurnRight => "turn_right",
            Action::Stop => "stop",
        }
    }
}

/// Turn that brings the heading toward `target`, or `None` when already
/// within the deadband. A target straight behind turns left.
pub fn turn_toward(pose: &Pose, target: Vec2) -> Option<Action> {
    let to = target - pose.position;
    if to.norm() < 1e-9 {
        return None;
    }
    let diff = wrap_deg(to.angle_deg() - pose.heading_deg as f64);
    if diff.abs() <= HEADING_DEADBAND_DEG {
        None
    } else if diff > 0.0 {
        Some(Action::TurnLeft)
    } else {
        Some(Action::TurnRight)
    }
}

/// Next action to follow `waypoints`.
///
/// Steers at the first waypoint at least [`LOOKAHEAD_M`] away past the one
/// nearest the agent (or the last one), turning when the bearing error exceeds the deadband and moving
/// forward otherwise. With a `stop_radius`, returns `Stop` once the final
/// waypoint is that close. Also returns `Stop` when there is nothing left to
/// approach.
pub fn next_action(pose: &Pose, waypoints: &[Vec2], stop_radius: Option<f64>) -> Action {
    let Some(last) = waypoints.last() else {
        return Action::Stop;
    };
    let p = pose.position;
    if stop_radius.is_some_and(|r| p.dist(*last) <= r) || p.dist(*last) < 1e-9 {
        return Action::Stop;
    }
    let nearest = (0..waypoints.len()).min_by(|&i, &j| p.dist(waypoints[i]).total_cmp(&p.dist(waypoints[j]))).unwrap_or(0);
    let target = waypoints[nearest..].iter().find(|w| p.dist(**w) >= LOOKAHEAD_M).unwrap_or(last);
    turn_toward(pose, *target).unwrap_or(Action::MoveForward)
}

/// Pose after an unobstructed action.
pub fn apply_action(pose: &Pose, action: Action) -> Pose {
    match action {
        Action::MoveForward => Pose { position: pose.position + pose.direction() * STEP_LENGTH_M, ..*pose },
        Action::TurnLeft => pose.rotated(TURN_DEG),
        Action::TurnRight => pose.rotated(-TURN_DEG),
        Action::Stop => *pose,
    }
}
