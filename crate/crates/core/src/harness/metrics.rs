use serde::{Deserialize, Serialize};

/// Success weighted by path length: `optimal / max(path, optimal)` on
/// success, 0 otherwise. A zero optimal length (start inside the success
/// region) scores 1 on success.
pub fn compute_spl(success: bool, path: f64, optimal: f64) -> f64 {
    if !success {
        0.0
    } else if optimal <= 0.0 {
        1.0
    } else {
        optimal / path.max(optimal)
    }
}

/// Progress toward the goal times path efficiency:
/// `max(0, 1 - d_final / d_init) * optimal / max(path, optimal)`.
pub fn compute_soft_spl(d_init: f64, d_final: f64, path: f64, optimal: f64) -> f64 {
    if d_init <= 0.0 {
        return if d_final <= 0.0 { 1.0 } else { 0.0 };
    }
    let progress = (1.0 - d_final / d_init).max(0.0);
    let efficiency = if optimal <= 0.0 { 1.0 } else { optimal / path.max(optimal) };
    progress * efficiency
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCause {
    /// The agent stopped on its own.
    Stopped,
    BudgetExhausted,
    /// No frontier left and no goal candidate to check.
    ExplorationExhausted,
    /// The language-model provider failed; see the diagnostic.
    ProviderFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub scene_seed: u64,
    pub goal: String,
    pub success: bool,
    pub path_length: f64,
    pub optimal_length: f64,
    pub spl: f64,
    pub soft_spl: f64,
    pub steps: u32,
    pub cause: EndCause,
    pub diagnostic: Option<String>,
    pub explanations: Vec<String>,
    pub llm_calls: usize,
    /// Candidates rejected by re-perception.
    pub rejected_candidates: usize,
    /// Stopped near an object that only looked like the goal.
    pub stopped_at_false_positive: bool,
    pub transcript_file: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: usize,
    /// `None` for an empty suite.
    pub success_rate: Option<f64>,
    pub mean_spl: Option<f64>,
    pub mean_soft_spl: Option<f64>,
    pub provider_failures: usize,
}

impl Aggregate {
    pub fn of(rows: &[EpisodeResult]) -> Self {
        let n = rows.len();
        let mean = |f: &dyn Fn(&EpisodeResult) -> f64| (n > 0).then(|| rows.iter().map(f).sum::<f64>() / n as f64);
        Self {
            episodes: n,
            success_rate: mean(&|r| if r.success { 1.0 } else { 0.0 }),
            mean_spl: mean(&|r| r.spl),
            mean_soft_spl: mean(&|r| r.soft_spl),
            provider_failures: rows.iter().filter(|r| r.cause == EndCause::ProviderFailure).count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub name: String,
    pub config_fingerprint: String,
    pub seeds: Vec<u64>,
    pub aggregate: Aggregate,
    pub episodes: Vec<EpisodeResult>,
}

impl BenchmarkReport {
    pub fn new(name: impl Into<String>, config_fingerprint: String, episodes: Vec<EpisodeResult>) -> Self {
        Self {
            name: name.into(),
            config_fingerprint,
            seeds: episodes.iter().map(|e| e.scene_seed).collect(),
            aggregate: Aggregate::of(&episodes),
            episodes,
        }
    }

    /// Aggregates match a recomputation from the rows.
    pub fn is_consistent(&self) -> bool {
        let again = Aggregate::of(&self.episodes);
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() < 1e-12,
            (None, None) => true,
            _ => false,
        };
        again.episodes == self.aggregate.episodes
            && close(again.success_rate, self.aggregate.success_rate)
            && close(again.mean_spl, self.aggregate.mean_spl)
            && close(again.mean_soft_spl, self.aggregate.mean_soft_spl)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Plain-text table: one row per episode, then the aggregates.
    pub fn table(&self) -> String {
        let mut out = format!("{}  (config {})\n", self.name, &self.config_fingerprint[..12.min(self.config_fingerprint.len())]);
        out.push_str(&format!(
            "{:>6}  {:<14} {:>7} {:>6} {:>8} {:>8} {:>6} {:>6}  {}\n",
            "seed", "goal", "success", "steps", "path_m", "optimal", "spl", "soft", "end"
        ));
        for e in &self.episodes {
            out.push_str(&format!(
                "{:>6}  {:<14} {:>7} {:>6} {:>8.2} {:>8.2} {:>6.3} {:>6.3}  {}\n",
                e.scene_seed,
                e.goal,
                if e.success { "yes" } else { "no" },
                e.steps,
                e.path_length,
                e.optimal_length,
                e.spl,
                e.soft_spl,
                serde_json::to_value(e.cause).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
            ));
        }
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "undefined".into());
        let a = &self.aggregate;
        out.push_str(&format!(
            "episodes {}  SR {}  SPL {}  SoftSPL {}  provider failures {}\n",
            a.episodes,
            fmt(a.success_rate),
            fmt(a.mean_spl),
            fmt(a.mean_soft_spl),
            a.provider_failures
        ));
        out
    }
}
