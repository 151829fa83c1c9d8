use crate::llm::{query_structured, ChatTurn, LlmBackend, LlmError, QueryFailure, ResponseShape, Role, Structured, Transcript};
use crate::prompts::{
    answer_question_prompt, ask_question_prompt, flat_text_prompt, object_distance_prompt, subgraph_distance_prompt,
    PromptKind, SubgraphText,
};
use serde::{Deserialize, Serialize};

/// Distance used when not even the object-level question gets an answer.
pub const FALLBACK_DISTANCE_M: f64 = 5.0;

const RETRIES: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// A later stage failed; the object-level distance stands in.
    ObjectDistance,
    /// The first stage failed; the default distance stands in.
    Default,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CotOutcome {
    pub distance: f64,
    pub reason: String,
    pub fallback: Option<Fallback>,
    pub transcript: Transcript,
}

fn valid_distance(v: &Structured) -> Result<(), String> {
    match v {
        Structured::Distance { distance, .. } if distance.is_finite() && *distance >= 0.0 => Ok(()),
        Structured::Distance { distance, .. } => Err(format!("distance {distance} is not a non-negative number")),
        _ => Err("distance object expected".into()),
    }
}

fn any(_: &Structured) -> Result<(), String> {
    Ok(())
}

struct Chain<'a> {
    llm: &'a dyn LlmBackend,
    step: u32,
    history: Vec<ChatTurn>,
    transcript: Transcript,
}

impl Chain<'_> {
    fn ask(
        &mut self,
        stage: PromptKind,
        prompt: String,
        shape: ResponseShape,
        validate: fn(&Structured) -> Result<(), String>,
    ) -> Result<Option<Structured>, LlmError> {
        let r = query_structured(self.llm, stage, &prompt, &self.history, shape, RETRIES, self.step, &mut self.transcript, validate);
        match r {
            Ok(v) => {
                let reply = self.transcript.records.last().map(|r| r.response.clone()).unwrap_or_default();
                self.history.push(ChatTurn { role: Role::User, content: prompt });
                self.history.push(ChatTurn { role: Role::Assistant, content: reply });
                Ok(Some(v))
            }
            Err(QueryFailure::Malformed(_)) => Ok(None),
            Err(QueryFailure::Provider(e)) => Err(e),
        }
    }
}

/// Four-stage reasoning about one subgraph: the central object's distance to
/// the goal, a clarifying question, its answer from the subgraph, and the
/// subgraph's distance to the goal. Later stages see the earlier exchanges as
/// conversation history.
///
/// Malformed replies are retried twice. If a later stage still fails, the
/// first stage's distance is used; if the first stage fails,
/// [`FALLBACK_DISTANCE_M`]. Provider errors are returned.
pub fn cot_predict_distance(
    subgraph: &SubgraphText,
    goal: &str,
    llm: &dyn LlmBackend,
    step: u32,
) -> Result<CotOutcome, LlmError> {
    let central = subgraph.nodes.first().map(String::as_str).unwrap_or("object");
    let mut chain = Chain { llm, step, history: Vec::new(), transcript: Transcript::default() };
    let first = chain.ask(PromptKind::ObjectDistance, object_distance_prompt(central, goal), ResponseShape::Distance, valid_distance)?;
    let Some(Structured::Distance { distance: d1, reason: r1 }) = first else {
        return Ok(CotOutcome {
            distance: FALLBACK_DISTANCE_M,
            reason: String::new(),
            fallback: Some(Fallback::Default),
            transcript: chain.transcript,
        });
    };
    let fallback = |chain: Chain| CotOutcome {
        distance: d1,
        reason: r1.clone(),
        fallback: Some(Fallback::ObjectDistance),
        transcript: chain.transcript,
    };
    let Some(Structured::Question(q)) =
        chain.ask(PromptKind::AskQuestion, ask_question_prompt(central, goal), ResponseShape::Question, any)?
    else {
        return Ok(fallback(chain));
    };
    if chain.ask(PromptKind::AnswerQuestion, answer_question_prompt(subgraph, &q), ResponseShape::Answer, any)?.is_none() {
        return Ok(fallback(chain));
    }
    match chain.ask(PromptKind::SubgraphDistance, subgraph_distance_prompt(subgraph, goal), ResponseShape::Distance, valid_distance)? {
        Some(Structured::Distance { distance, reason }) => {
            Ok(CotOutcome { distance, reason, fallback: None, transcript: chain.transcript })
        }
        _ => Ok(fallback(chain)),
    }
}

/// Single-prompt variant: the subgraph flattened to text, no intermediate
/// questions.
pub fn flat_predict_distance(
    subgraph: &SubgraphText,
    goal: &str,
    llm: &dyn LlmBackend,
    step: u32,
) -> Result<CotOutcome, LlmError> {
    let mut chain = Chain { llm, step, history: Vec::new(), transcript: Transcript::default() };
    match chain.ask(PromptKind::FlatText, flat_text_prompt(subgraph, goal), ResponseShape::Distance, valid_distance)? {
        Some(Structured::Distance { distance, reason }) => {
            Ok(CotOutcome { distance, reason, fallback: None, transcript: chain.transcript })
        }
        _ => Ok(CotOutcome {
            distance: FALLBACK_DISTANCE_M,
            reason: String::new(),
            fallback: Some(Fallback::Default),
            transcript: chain.transcript,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedLlm;

    fn sofa_table() -> SubgraphText {
        SubgraphText { nodes: vec!["sofa".into(), "table".into()], edges: vec!["sofa next to table".into()] }
    }

    #[test]
    fn four_stages_in_order() {
        let llm = ScriptedLlm::from_pairs([
            ("(?i)predict the most likely distance of two objects", r#"{"distance": 3, "reason": "r1"}"#),
            ("ask a question", r#"{"question": "Is there a table next to the sofa?"}"#),
            ("answer the question", r#"{"answer": "Yes"}"#),
            ("distance of a subgraph and a goal", r#"{"distance": 2, "reason": "Because TV and sofa are on both sides of table."}"#),
        ])
        .unwrap();
        let out = cot_predict_distance(&sofa_table(), "TV", &llm, 0).unwrap();
        assert_eq!(out.distance, 2.0);
        assert_eq!(out.reason, "Because TV and sofa are on both sides of table.");
        assert_eq!(out.fallback, None);
        let stages: Vec<PromptKind> = out.transcript.records.iter().map(|r| r.stage).collect();
        assert_eq!(stages, [PromptKind::ObjectDistance, PromptKind::AskQuestion, PromptKind::AnswerQuestion, PromptKind::SubgraphDistance]);
    }

    #[test]
    fn late_failure_falls_back_to_object_distance() {
        let llm = ScriptedLlm::from_pairs([
            ("", r#"{"distance": 0.5, "reason": "Because there is always a chair next to the table."}"#),
            ("", "I cannot"),
            ("", "I cannot"),
            ("", "I cannot"),
        ])
        .unwrap();
        let out = cot_predict_distance(&sofa_table(), "chair", &llm, 0).unwrap();
        assert_eq!(out.distance, 0.5);
        assert_eq!(out.fallback, Some(Fallback::ObjectDistance));
        assert_eq!(out.transcript.len(), 4);
    }

    #[test]
    fn first_failure_uses_default() {
        let llm = ScriptedLlm::from_pairs([("", "?"), ("", "?"), ("", r#"{"distance": -2, "reason": ""}"#)]).unwrap();
        let out = cot_predict_distance(&sofa_table(), "TV", &llm, 0).unwrap();
        assert_eq!(out.distance, FALLBACK_DISTANCE_M);
        assert_eq!(out.fallback, Some(Fallback::Default));
    }

    #[test]
    fn zero_distance_passes_through() {
        let llm = ScriptedLlm::from_pairs([
            ("", r#"{"distance": 0, "reason": ""}"#),
            ("", r#"{"question": "q"}"#),
            ("", r#"{"answer": "No"}"#),
            ("", r#"{"distance": 0, "reason": ""}"#),
        ])
        .unwrap();
        let out = cot_predict_distance(&sofa_table(), "TV", &llm, 0).unwrap();
        assert_eq!(out.distance, 0.0);
        assert_eq!(crate::reasoning::subgraph_probability(out.distance), Ok(10.0));
    }

    #[test]
    fn provider_errors_propagate() {
        let llm = ScriptedLlm::from_pairs(Vec::<(String, String)>::new()).unwrap();
        assert!(matches!(cot_predict_distance(&sofa_table(), "TV", &llm, 0), Err(LlmError::ScriptExhausted { .. })));
    }

    #[test]
    fn later_stages_carry_history() {
        struct Echo;
        impl LlmBackend for Echo {
            fn complete(&self, req: &crate::llm::CompletionRequest) -> Result<String, LlmError> {
                Ok(match PromptKind::classify(&req.prompt).unwrap().0 {
                    PromptKind::ObjectDistance => r#"{"distance": 1, "reason": ""}"#.into(),
                    PromptKind::AskQuestion => format!(r#"{{"question": "{}"}}"#, req.history.len()),
                    PromptKind::AnswerQuestion => format!(r#"{{"answer": "{}"}}"#, req.history.len()),
                    _ => format!(r#"{{"distance": {}, "reason": ""}}"#, req.history.len()),
                })
            }
        }
        assert_eq!(cot_predict_distance(&sofa_table(), "TV", &Echo, 0).unwrap().distance, 6.0);
    }
}
