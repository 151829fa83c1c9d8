use super::{parse_structured, CompletionRequest, LlmBackend, LlmError, ResponseShape, Structured};
use crate::prompts::PromptKind;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Ok,
    Invalid(String),
    ProviderError(String),
}

/// One prompt/response exchange.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub step: u32,
    pub stage: PromptKind,
    pub attempt: u32,
    pub prompt: String,
    pub response: String,
    pub status: ParseStatus,
}

/// Ordered log of language-model exchanges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub records: Vec<TranscriptRecord>,
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn extend(&mut self, other: Transcript) {
        self.records.extend(other.records);
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> serde_json::Result<Self> {
        let records = text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(Self { records })
    }
}

/// Why a structured query produced no value.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryFailure {
    /// Every attempt returned text that did not validate.
    Malformed(String),
    /// The provider itself failed; retrying at this level will not help.
    Provider(LlmError),
}

/// Sends `prompt`, parses the reply as `shape` and runs `validate` on it,
/// retrying up to `retries` more times on malformed replies. Every attempt is
/// appended to `transcript`.
#[allow(clippy::too_many_arguments)]
pub fn query_structured(
    llm: &dyn LlmBackend,
    stage: PromptKind,
    prompt: &str,
    history: &[super::ChatTurn],
    shape: ResponseShape,
    retries: u32,
    step: u32,
    transcript: &mut Transcript,
    validate: impl Fn(&Structured) -> Result<(), String>,
) -> Result<Structured, QueryFailure> {
    let mut last = String::new();
    for attempt in 0..=retries {
        let req = CompletionRequest::new(prompt).with_history(history.to_vec()).with_id(transcript.len() as u64);
        let response = match llm.complete(&req) {
            Ok(r) => r,
            Err(e) => {
                transcript.records.push(TranscriptRecord {
                    step,
                    stage,
                    attempt,
                    prompt: prompt.to_string(),
                    response: String::new(),
                    status: ParseStatus::ProviderError(e.to_string()),
                });
                return Err(QueryFailure::Provider(e));
            }
        };
        let checked = parse_structured(&response, shape).map_err(|e| e.to_string()).and_then(|v| validate(&v).map(|_| v));
        let status = match &checked {
            Ok(_) => ParseStatus::Ok,
            Err(e) => ParseStatus::Invalid(e.clone()),
        };
        transcript.records.push(TranscriptRecord { step, stage, attempt, prompt: prompt.to_string(), response, status });
        match checked {
            Ok(v) => return Ok(v),
            Err(e) => last = e,
        }
    }
    Err(QueryFailure::Malformed(last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedLlm;

    #[test]
    fn retries_twice_then_gives_up() {
        let llm = ScriptedLlm::from_pairs([("", "nope"), ("", "still nope"), ("", "{}")]).unwrap();
        let mut t = Transcript::default();
        let r = query_structured(&llm, PromptKind::AskQuestion, "q", &[], ResponseShape::Question, 2, 0, &mut t, |_| Ok(()));
        assert!(matches!(r, Err(QueryFailure::Malformed(_))));
        assert_eq!(t.len(), 3);
        assert_eq!(llm.remaining(), 0);
    }

    #[test]
    fn validator_failures_are_retried() {
        let llm = ScriptedLlm::from_pairs([("", r#"{"distance": -1, "reason": ""}"#), ("", r#"{"distance": 2, "reason": "ok"}"#)]).unwrap();
        let mut t = Transcript::default();
        let r = query_structured(&llm, PromptKind::ObjectDistance, "q", &[], ResponseShape::Distance, 2, 3, &mut t, |v| match v {
            Structured::Distance { distance, .. } if *distance < 0.0 => Err("negative".into()),
            _ => Ok(()),
        });
        assert_eq!(r.unwrap(), Structured::Distance { distance: 2.0, reason: "ok".into() });
        assert_eq!(t.records[0].status, ParseStatus::Invalid("negative".into()));
        assert_eq!(t.records[1].step, 3);
    }

    #[test]
    fn jsonl_round_trip() {
        let t = Transcript {
            records: vec![TranscriptRecord {
                step: 1,
                stage: PromptKind::EdgeConnecting,
                attempt: 0,
                prompt: "a\nb".into(),
                response: "[]".into(),
                status: ParseStatus::Ok,
            }],
        };
        assert_eq!(Transcript::from_jsonl(&t.to_jsonl()).unwrap(), t);
    }
}
