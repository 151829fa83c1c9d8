//! Completion interface shared by every language-model call in the crate.
//!
//! Providers: [`ScriptedLlm`] replays a fixed script, [`PriorOracleLlm`]
//! answers from the simulator's category priors, and `HttpLlm` (feature
//! `http`) talks to a chat-completion endpoint. [`MeteredLlm`] wraps any of
//! them to count tokens and simulated latency.

mod cost;
#[cfg(feature = "http")]
mod http;
mod metered;
mod oracle;
mod parse;
mod scripted;
mod transcript;

pub use cost::{
    estimate_cost, exact_coefficient, published_coefficient, verify_complexity_bound, BoundCheck, CostEstimate,
    CostModel, PUBLISHED_BOUND_CONSTANT,
};
#[cfg(feature = "http")]
pub use http::{HttpConfig, HttpLlm};
pub use metered::{LatencyModel, MeteredLlm, UsageStats};
pub use oracle::PriorOracleLlm;
pub use parse::{parse_structured, render_structured, ParseError, ResponseShape, Structured};
pub use scripted::{ScriptEntry, ScriptedLlm};
pub use transcript::{query_structured, ParseStatus, QueryFailure, Transcript, TranscriptRecord};

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    /// Earlier turns of the same conversation, oldest first.
    pub history: Vec<ChatTurn>,
    pub temperature: f32,
    pub max_tokens: u32,
    pub request_id: u64,
}

impl CompletionRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self { prompt: prompt.into(), history: Vec::new(), temperature: 0.0, max_tokens: 512, request_id: 0 }
    }

    pub fn with_history(mut self, history: Vec<ChatTurn>) -> Self {
        self.history = history;
        self
    }

    pub fn with_id(mut self, id: u64) -> Self {
        self.request_id = id;
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("provider unavailable after {attempts} attempt(s): {reason}")]
    Unavailable { attempts: u32, reason: String },
    #[error("request rejected with HTTP {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("script entry {index} expects /{pattern}/ but prompt starts with {excerpt:?}")]
    ScriptMismatch { index: usize, pattern: String, excerpt: String },
    #[error("script exhausted after {consumed} response(s)")]
    ScriptExhausted { consumed: usize },
    #[error("provider configuration: {0}")]
    Config(String),
    #[error("malformed provider reply: {0}")]
    Malformed(String),
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError>;

    fn name(&self) -> &str {
        "llm"
    }
}

impl<T: LlmBackend + ?Sized> LlmBackend for &T {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: LlmBackend + ?Sized> LlmBackend for Box<T> {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        (**self).complete(req)
    }

    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Bounded retry with exponential backoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 2, base_delay: Duration::from_millis(500) }
    }
}

impl RetryPolicy {
    pub fn delay_for(&self, retry: u32) -> Duration {
        self.base_delay.saturating_mul(1 << retry.min(16))
    }
}

/// Rough token count: one token per four characters.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}
