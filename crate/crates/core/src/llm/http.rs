use super::{CompletionRequest, LlmBackend, LlmError, RetryPolicy, Role};
use serde_json::{json, Value};
use std::time::Duration;

pub const ENV_BASE_URL: &str = "SCENENAV_LLM_BASE_URL";
pub const ENV_API_KEY: &str = "SCENENAV_LLM_API_KEY";
pub const ENV_MODEL: &str = "SCENENAV_LLM_MODEL";

#[derive(Clone, Debug, PartialEq)]
pub struct HttpConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            model: model.into(),
            timeout: Duration::from_secs(60),
            retry: RetryPolicy::default(),
        }
    }

    /// Reads `SCENENAV_LLM_BASE_URL`, `SCENENAV_LLM_API_KEY` and `SCENENAV_LLM_MODEL`.
    pub fn from_env() -> Result<Self, LlmError> {
        let base = std::env::var(ENV_BASE_URL).map_err(|_| LlmError::Config(format!("{ENV_BASE_URL} is not set")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "gpt-4".to_string());
        let mut cfg = Self::new(base, model);
        cfg.api_key = std::env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        Ok(cfg)
    }
}

/// Chat-completion client. Server errors, rate limiting and transport
/// failures are retried with exponential backoff; other 4xx replies are not.
pub struct HttpLlm {
    config: HttpConfig,
    agent: ureq::Agent,
}

enum Attempt {
    Retry(String),
    Fatal(LlmError),
}

impl HttpLlm {
    pub fn new(config: HttpConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        Self { config, agent }
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn body(&self, req: &CompletionRequest) -> Value {
        let mut messages: Vec<Value> = req
            .history
            .iter()
            .map(|t| {
                let role = match t.role {
                    Role::User => "user",
                    Role::Assistant => "assistant",
                };
                json!({ "role": role, "content": t.content })
            })
            .collect();
        messages.push(json!({ "role": "user", "content": req.prompt }));
        json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        })
    }

    fn attempt(&self, url: &str, body: &str) -> Result<String, Attempt> {
        let mut call = self.agent.post(url).set("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            call = call.set("Authorization", &format!("Bearer {key}"));
        }
        match call.send_string(body) {
            Ok(resp) => {
                let text = resp.into_string().map_err(|e| Attempt::Retry(format!("reading body: {e}")))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| Attempt::Fatal(LlmError::Malformed(e.to_string())))?;
                v.pointer("/choices/0/message/content")
                    .and_then(Value::as_str)
                    .map(str::to_owned)
                    .ok_or_else(|| Attempt::Fatal(LlmError::Malformed("missing choices[0].message.content".into())))
            }
            Err(ureq::Error::Status(code, resp)) if code == 429 || code >= 500 => {
                Err(Attempt::Retry(format!("HTTP {code}: {}", resp.status_text())))
            }
            Err(ureq::Error::Status(code, resp)) => {
                let body = resp.into_string().unwrap_or_default();
                Err(Attempt::Fatal(LlmError::Rejected { status: code, body }))
            }
            Err(ureq::Error::Transport(t)) => Err(Attempt::Retry(t.to_string())),
        }
    }
}

impl LlmBackend for HttpLlm {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = self.body(req).to_string();
        let retry = self.config.retry;
        let mut last = String::new();
        for attempt in 0..=retry.max_retries {
            if attempt > 0 {
                std::thread::sleep(retry.delay_for(attempt - 1));
            }
            match self.attempt(&url, &body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(reason)) => {
                    log::warn!("request {} attempt {} failed: {reason}", req.request_id, attempt + 1);
                    last = reason;
                }
            }
        }
        Err(LlmError::Unavailable { attempts: retry.max_retries + 1, reason: last })
    }

    fn name(&self) -> &str {
        "http"
    }
}
