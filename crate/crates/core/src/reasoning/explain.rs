use super::FrontierScore;
use crate::llm::{CompletionRequest, LlmBackend, ParseStatus, Transcript, TranscriptRecord};
use crate::prompts::{explanation_prompt, PromptKind};
use crate::scene_graph::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Number of subgraphs, nearest to the chosen frontier, that an explanation
/// summarizes.
pub const EXPLANATION_FANOUT: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub frontier: usize,
    pub text: String,
    pub cited: Vec<NodeId>,
    /// The model failed and `text` joins the raw analyses instead.
    pub fallback: bool,
}

/// Summarizes why `selected` was chosen from the analyses of its nearest
/// subgraphs. `analyses` maps subgraph ids to their reasoning text.
pub fn explain_decision(
    selected: &FrontierScore,
    analyses: &BTreeMap<NodeId, String>,
    goal: &str,
    llm: &dyn LlmBackend,
    step: u32,
    transcript: &mut Transcript,
) -> Explanation {
    let mut terms: Vec<_> = selected.terms.iter().collect();
    terms.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.subgraph.cmp(&b.subgraph)));
    let cited: Vec<NodeId> = terms.iter().take(EXPLANATION_FANOUT).map(|t| t.subgraph).collect();
    let lines: Vec<String> = cited.iter().map(|id| analyses.get(id).cloned().unwrap_or_default()).collect();
    let prompt = explanation_prompt(goal, &lines);
    let (text, status, fallback) = match llm.complete(&CompletionRequest::new(prompt.as_str())) {
        Ok(t) if !t.trim().is_empty() => (t, ParseStatus::Ok, false),
        Ok(t) => (t, ParseStatus::Invalid("empty explanation".into()), true),
        Err(e) => (String::new(), ParseStatus::ProviderError(e.to_string()), true),
    };
    transcript.records.push(TranscriptRecord {
        step,
        stage: PromptKind::Explanation,
        attempt: 0,
        prompt,
        response: text.clone(),
        status,
    });
    let text = if fallback { lines.join(" ") } else { text };
    Explanation { frontier: selected.frontier, text, cited, fallback }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{LlmError, ScriptedLlm};
    use crate::reasoning::ScoreTerm;

    fn frontier(distances: &[f64]) -> FrontierScore {
        let terms = distances
            .iter()
            .enumerate()
            .map(|(i, d)| ScoreTerm { subgraph: i as NodeId, distance: *d, value: 1.0 / d })
            .collect::<Vec<_>>();
        FrontierScore { frontier: 4, score: terms.iter().map(|t| t.value).sum(), terms }
    }

    fn analyses(n: usize) -> BTreeMap<NodeId, String> {
        (0..n as NodeId).map(|i| (i, format!("reason {i}."))).collect()
    }

    #[test]
    fn cites_the_three_nearest() {
        let llm = ScriptedLlm::from_pairs([("Goal: bed", "Head for the bedroom.")]).unwrap();
        let mut t = Transcript::default();
        let e = explain_decision(&frontier(&[5.0, 1.0, 4.0, 2.0, 3.0]), &analyses(5), "bed", &llm, 0, &mut t);
        assert_eq!(e.cited, vec![1, 3, 4]);
        assert_eq!(e.text, "Head for the bedroom.");
        assert!(!e.fallback);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn fewer_subgraphs_than_fanout() {
        let llm = ScriptedLlm::from_pairs([("", "ok")]).unwrap();
        let e = explain_decision(&frontier(&[2.0]), &analyses(1), "bed", &llm, 0, &mut Transcript::default());
        assert_eq!(e.cited, vec![0]);
    }

    #[test]
    fn failure_joins_raw_reasons() {
        struct Down;
        impl LlmBackend for Down {
            fn complete(&self, _: &CompletionRequest) -> Result<String, LlmError> {
                Err(LlmError::Unavailable { attempts: 3, reason: "timeout".into() })
            }
        }
        let e = explain_decision(&frontier(&[1.0, 2.0]), &analyses(2), "bed", &Down, 0, &mut Transcript::default());
        assert!(e.fallback);
        assert_eq!(e.text, "reason 0. reason 1.");
    }
}
