//! Path planning on the occupancy map and the low-level behaviours built on it.

mod approach;
mod fmm;
mod follow;

pub use approach::{Approach, ApproachStep, OBSERVE_BAND_M, STOP_RADIUS_M};
pub use fmm::{plan_path, plan_path_with, GeodesicField, Path, PlanError, PlanOptions};
pub use follow::{
    apply_action, next_action, turn_toward, Action, HEADING_DEADBAND_DEG, LOOKAHEAD_M, STEP_LENGTH_M, TURN_DEG,
};
