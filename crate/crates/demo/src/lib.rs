//! WebAssembly bindings for the static demo page in `www/`.
//!
//! The page calls [`generate_scene`] to build a floor plan and [`run_episode`]
//! to drive the agent through it with the prior-oracle model; scrubbing
//! through the returned trace happens in JavaScript.

use scenenav::harness::{self, AgentConfig, EpisodeResult, TraceRecord};
use scenenav::llm::PriorOracleLlm;
use scenenav::sim::{self, GroundTruthVlm, Scene, SceneParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct EpisodeView<'a> {
    result: &'a EpisodeResult,
    trace: &'a [TraceRecord],
    /// Final map as rows of `?`, `.` and `#`, cropped to the explored area.
    map: Vec<String>,
    map_origin: [f64; 2],
    map_resolution: f64,
}

pub fn scene_json(seed: u32, rooms: u32, fp_rate: f64) -> Result<String, String> {
    let params = SceneParams { room_count: rooms as usize, false_positive_rate: fp_rate, ..SceneParams::default() };
    sim::generate_scene(seed as u64, &params).map(|s| s.to_json()).map_err(|e| e.to_string())
}

pub fn episode_json(scene: &str, reperception: bool, scene_graph: bool) -> Result<String, String> {
    let scene = Scene::from_json(scene).map_err(|e| e.to_string())?;
    let mut cfg = AgentConfig::default();
    cfg.ablations.reperception = reperception;
    cfg.ablations.scene_graph = scene_graph;
    let out = harness::run_episode(&scene, &cfg, &PriorOracleLlm::new(), &GroundTruthVlm::new(scene.clone()));
    let bounds = out.map.known_bounds().unwrap_or_else(|| out.map.full_bounds());
    let map = (bounds.min.y..=bounds.max.y)
        .rev()
        .map(|y| {
            (bounds.min.x..=bounds.max.x)
                .map(|x| match out.map.get(scenenav::mapping::Cell::new(x, y)) {
                    Some(scenenav::mapping::CellState::Free) => '.',
                    Some(scenenav::mapping::CellState::Occupied) => '#',
                    _ => '?',
                })
                .collect()
        })
        .collect();
    let corner = out.map.center(bounds.min);
    let half = out.map.resolution() / 2.0;
    let view = EpisodeView {
        result: &out.result,
        trace: &out.trace,
        map,
        map_origin: [corner.x - half, corner.y - half],
        map_resolution: out.map.resolution(),
    };
    serde_json::to_string(&view).map_err(|e| e.to_string())
}

/// Scene JSON for `seed`.
#[wasm_bindgen(js_name = generateScene)]
pub fn generate_scene(seed: u32, rooms: u32, fp_rate: f64) -> Result<String, JsError> {
    scene_json(seed, rooms, fp_rate).map_err(|e| JsError::new(&e))
}

/// Runs one episode on a scene from [`generate_scene`] and returns the
/// result, the per-step trace and the final map as JSON.
#[wasm_bindgen(js_name = runEpisode)]
pub fn run_episode(scene: &str, reperception: bool, scene_graph: bool) -> Result<String, JsError> {
    episode_json(scene, reperception, scene_graph).map_err(|e| JsError::new(&e))
}
