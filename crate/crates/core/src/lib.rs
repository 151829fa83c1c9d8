//! Zero-shot object-goal navigation on top of an online hierarchical scene graph.
//!
//! The crate is organised around the episode loop in [`harness`]: the
//! [`sim`] produces depth scans and detections, [`mapping`] keeps the BEV
//! occupancy grid and frontiers, [`scene_graph`] maintains object/group/room
//! nodes and their edges, [`reasoning`] turns subgraphs into frontier scores
//! through a language model, and [`planner`] converts the chosen target into
//! discrete actions.

pub mod geometry;
pub mod harness;
pub mod llm;
pub mod mapping;
pub mod planner;
pub mod prompts;
pub mod reasoning;
pub mod scene_graph;
pub mod sim;

pub use geometry::Vec2;
