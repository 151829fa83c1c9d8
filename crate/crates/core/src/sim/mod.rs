//! Synthetic multi-room environment: procedural scenes, the observation
//! model and episode stepping.

pub mod catalog;
mod scene;

pub use scene::{
    category_size, generate_scene, Decoy, Door, Room, Scene, SceneError, SceneObject, SceneParams, TruthRelation,
    DOOR_WIDTH_M, GRID_CELLS, GRID_RESOLUTION, NEAR_M, NEXT_TO_M, SCENE_SCHEMA, WALL_THICKNESS_M,
};
mod world;

pub use world::{
    check_success, EpisodeState, GroundTruthVlm, Observation, SimDetection, SimError, Termination, World, AGENT_RADIUS_M,
    CONFIDENCE_BASE, CONFIDENCE_FALLOFF_PER_M, CONFIDENCE_NOISE, DECOY_REVEAL_RANGE_M, DEPTH_RAYS, FOV_DEG, MAX_STEPS,
    SUCCESS_DISTANCE_M,
};
