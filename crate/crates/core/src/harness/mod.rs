//! The navigation agent and the benchmark around it: episode loop, metrics,
//! suites and their on-disk artifacts.

mod bench;
mod config;
mod episode;
mod metrics;
mod render;

pub use bench::{run_suite, write_atomic, write_suite, SuiteRun};
pub use config::{Ablations, AgentConfig, Prompting, SuiteConfig};
pub use episode::{run_episode, trace_from_jsonl, trace_to_jsonl, EpisodeOutput, Phase, TraceRecord};
pub use metrics::{compute_soft_spl, compute_spl, Aggregate, BenchmarkReport, EndCause, EpisodeResult};
pub use render::{render_trace, TRACE_SHADE};
