use super::config::SuiteConfig;
use super::episode::{run_episode, trace_to_jsonl, EpisodeOutput};
use super::metrics::BenchmarkReport;
use crate::llm::LlmBackend;
use crate::scene_graph::VlmBackend;
use crate::sim::{generate_scene, GroundTruthVlm, Scene, SceneError};
use std::io;
use std::path::Path;

pub struct SuiteRun {
    pub report: BenchmarkReport,
    pub scenes: Vec<Scene>,
    pub outputs: Vec<EpisodeOutput>,
}

/// Runs every seed of `suite` on up to `threads` worker threads. Results
/// come back in seed order whatever the thread count, so with a stateless
/// provider the output does not depend on it.
pub fn run_suite(suite: &SuiteConfig, llm: &dyn LlmBackend, threads: usize) -> Result<SuiteRun, SceneError> {
    let scenes =
        suite.seeds.iter().map(|&s| generate_scene(s, &suite.params_for(s))).collect::<Result<Vec<_>, _>>()?;
    let run_one = |scene: &Scene| {
        let vlm = GroundTruthVlm::new(scene.clone());
        run_episode(scene, &suite.agent, llm, &vlm as &dyn VlmBackend)
    };
    let threads = threads.clamp(1, scenes.len().max(1));
    let mut outputs: Vec<Option<EpisodeOutput>> = (0..scenes.len()).map(|_| None).collect();
    if threads == 1 {
        for (slot, scene) in outputs.iter_mut().zip(&scenes) {
            *slot = Some(run_one(scene));
        }
    } else {
        let chunk = scenes.len().div_ceil(threads);
        std::thread::scope(|s| {
            for (slots, batch) in outputs.chunks_mut(chunk).zip(scenes.chunks(chunk)) {
                s.spawn(move || {
                    for (slot, scene) in slots.iter_mut().zip(batch) {
                        *slot = Some(run_one(scene));
                    }
                });
            }
        });
    }
    let mut outputs: Vec<EpisodeOutput> = outputs.into_iter().map(|o| o.expect("every episode ran")).collect();
    for o in &mut outputs {
        o.result.transcript_file = Some(format!("transcript_{}.jsonl", o.result.scene_seed));
    }
    let report = BenchmarkReport::new(&suite.name, suite.fingerprint(), outputs.iter().map(|o| o.result.clone()).collect());
    Ok(SuiteRun { report, scenes, outputs })
}

/// Writes `report.json`, `report.txt` and per-episode traces and
/// transcripts into `dir`.
pub fn write_suite(dir: &Path, run: &SuiteRun) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for o in &run.outputs {
        let seed = o.result.scene_seed;
        write_atomic(&dir.join(format!("trace_{seed}.jsonl")), trace_to_jsonl(&o.trace))?;
        write_atomic(&dir.join(format!("transcript_{seed}.jsonl")), o.transcript.to_jsonl())?;
    }
    write_atomic(&dir.join("report.txt"), run.report.table())?;
    write_atomic(&dir.join("report.json"), run.report.to_json())
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, contents: impl AsRef<[u8]>) -> io::Result<()> {
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}
