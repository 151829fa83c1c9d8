use super::{CompletionRequest, LlmBackend, LlmError};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Mutex;

/// One `(pattern, response)` pair of a script file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    /// Regular expression the prompt must match.
    pub pattern: String,
    pub response: String,
}

/// Replays a fixed script in order.
///
/// Every call consumes the next entry; a prompt that does not match the
/// entry's pattern is an error rather than a skip, so tests notice when the
/// prompt sequence drifts.
pub struct ScriptedLlm {
    entries: Vec<(Regex, ScriptEntry)>,
    cursor: Mutex<usize>,
    cycle: bool,
}

impl ScriptedLlm {
    pub fn new(entries: Vec<ScriptEntry>) -> Result<Self, LlmError> {
        let compiled = entries
            .into_iter()
            .map(|e| {
                Regex::new(&e.pattern)
                    .map(|re| (re, e.clone()))
                    .map_err(|err| LlmError::Config(format!("bad pattern {:?}: {err}", e.pattern)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { entries: compiled, cursor: Mutex::new(0), cycle: false })
    }

    /// Restart from the first entry instead of failing when the script ends.
    pub fn cycling(mut self) -> Self {
        self.cycle = true;
        self
    }

    pub fn from_pairs<P: Into<String>, R: Into<String>>(pairs: impl IntoIterator<Item = (P, R)>) -> Result<Self, LlmError> {
        Self::new(pairs.into_iter().map(|(p, r)| ScriptEntry { pattern: p.into(), response: r.into() }).collect())
    }

    /// Reads a JSON array of `{"pattern": ..., "response": ...}` objects.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        let entries: Vec<ScriptEntry> =
            serde_json::from_str(&text).map_err(|e| LlmError::Config(format!("{}: {e}", path.display())))?;
        Self::new(entries)
    }

    pub fn consumed(&self) -> usize {
        *self.cursor.lock().expect("script cursor poisoned")
    }

    pub fn remaining(&self) -> usize {
        self.entries.len().saturating_sub(self.consumed())
    }
}

impl LlmBackend for ScriptedLlm {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let mut cursor = self.cursor.lock().expect("script cursor poisoned");
        if *cursor >= self.entries.len() {
            if self.cycle && !self.entries.is_empty() {
                *cursor = 0;
            } else {
                return Err(LlmError::ScriptExhausted { consumed: *cursor });
            }
        }
        let (re, entry) = &self.entries[*cursor];
        if !re.is_match(&req.prompt) {
            return Err(LlmError::ScriptMismatch {
                index: *cursor,
                pattern: entry.pattern.clone(),
                excerpt: req.prompt.chars().take(60).collect(),
            });
        }
        *cursor += 1;
        Ok(entry.response.clone())
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_fixture_verbatim() {
        let fixture = r#"{"distance": 0.5, "reason": "Because there is always a chair next to the table."}"#;
        let llm = ScriptedLlm::from_pairs([("Predict the most likely distance", fixture)]).unwrap();
        let out = llm.complete(&CompletionRequest::new("Predict the most likely distance between table and chair")).unwrap();
        assert_eq!(out, fixture);
    }

    #[test]
    fn mismatch_and_exhaustion_are_errors() {
        let llm = ScriptedLlm::from_pairs([("^alpha", "1")]).unwrap();
        assert!(matches!(llm.complete(&CompletionRequest::new("beta")), Err(LlmError::ScriptMismatch { index: 0, .. })));
        assert_eq!(llm.complete(&CompletionRequest::new("alpha")).unwrap(), "1");
        assert_eq!(llm.complete(&CompletionRequest::new("alpha")), Err(LlmError::ScriptExhausted { consumed: 1 }));
    }

    #[test]
    fn identical_prompt_sequences_replay_identically() {
        let make = || ScriptedLlm::from_pairs([("a", "x"), ("b", "y"), ("a|b", "z")]).unwrap();
        let prompts = ["a", "b", "ab"];
        let run = |llm: ScriptedLlm| prompts.iter().map(|p| llm.complete(&CompletionRequest::new(*p)).unwrap()).collect::<Vec<_>>();
        assert_eq!(run(make()), run(make()));
    }

    #[test]
    fn cycling_script_wraps_around() {
        let llm = ScriptedLlm::from_pairs([(".", "r")]).unwrap().cycling();
        for _ in 0..3 {
            assert_eq!(llm.complete(&CompletionRequest::new("p")).unwrap(), "r");
        }
    }
}
