use super::{estimate_tokens, CompletionRequest, LlmBackend, LlmError};
use std::sync::Mutex;

/// Simulated latency: `per_token_ms` times prompt plus response tokens.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatencyModel {
    pub per_token_ms: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self { per_token_ms: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UsageStats {
    pub calls: usize,
    pub prompt_tokens: usize,
    pub response_tokens: usize,
    pub simulated_ms: f64,
}

/// Counts calls and tokens of an inner backend and accumulates a simulated
/// latency without sleeping.
pub struct MeteredLlm<B> {
    inner: B,
    latency: LatencyModel,
    stats: Mutex<UsageStats>,
}

impl<B: LlmBackend> MeteredLlm<B> {
    pub fn new(inner: B, latency: LatencyModel) -> Self {
        Self { inner, latency, stats: Mutex::new(UsageStats::default()) }
    }

    pub fn stats(&self) -> UsageStats {
        *self.stats.lock().expect("stats poisoned")
    }

    pub fn reset(&self) {
        *self.stats.lock().expect("stats poisoned") = UsageStats::default();
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }
}

impl<B: LlmBackend> LlmBackend for MeteredLlm<B> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let out = self.inner.complete(req)?;
        let p = estimate_tokens(&req.prompt) + req.history.iter().map(|t| estimate_tokens(&t.content)).sum::<usize>();
        let r = estimate_tokens(&out);
        let mut s = self.stats.lock().expect("stats poisoned");
        s.calls += 1;
        s.prompt_tokens += p;
        s.response_tokens += r;
        s.simulated_ms += self.latency.per_token_ms * (p + r) as f64;
        Ok(out)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
