use super::{CompletionRequest, LlmBackend, LlmError};
use crate::prompts::{PromptKind, FLAT_TEXT_PREAMBLE};
use crate::sim::catalog;
use serde_json::{json, Value};

/// Deterministic stand-in for a language model that answers every prompt
/// template from the simulator's category priors.
///
/// Distances follow [`catalog::prior_distance`]; a subgraph is as close to
/// the goal as its most telling object, pulled in when its room is the
/// goal's room and pushed out when it is another room.
#[derive(Clone, Copy, Debug, Default)]
pub struct PriorOracleLlm;

impl PriorOracleLlm {
    pub fn new() -> Self {
        Self
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a str, LlmError> {
    v.get(key).and_then(Value::as_str).ok_or_else(|| LlmError::Malformed(format!("prompt slot lacks {key:?}")))
}

fn slot(payload: &str) -> Result<Value, LlmError> {
    serde_json::from_str(payload.trim()).map_err(|e| LlmError::Malformed(format!("prompt slot is not JSON: {e}")))
}

fn node_list(subgraph: &Value) -> Vec<String> {
    subgraph
        .get("nodes")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(str::to_string).collect())
        .unwrap_or_default()
}

fn relation_for(a: &str, b: &str) -> &'static str {
    if catalog::are_companions(a, b) {
        "next to"
    } else if catalog::home_rooms(a).iter().any(|r| catalog::home_rooms(b).contains(r)) {
        "near"
    } else {
        "opposite to"
    }
}

/// Distance from a set of node labels to the goal, with the reason.
fn subgraph_distance(nodes: &[String], goal: &str) -> (f64, String) {
    let mut best: Option<(f64, &str)> = None;
    let mut room: Option<&str> = None;
    for n in nodes {
        if catalog::is_room_type(n) {
            room.get_or_insert(n.as_str());
            continue;
        }
        if catalog::home_rooms(n).is_empty() && !n.eq_ignore_ascii_case(goal) {
            continue;
        }
        let d = catalog::prior_distance(n, goal);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, n.as_str()));
        }
    }
    let (mut d, mut reason) = match best {
        Some((d, n)) => (d, format!("Because {goal} is usually about {d} meters from the {n}.")),
        None => (5.0, format!("Because nothing here hints at where the {goal} is.")),
    };
    if let (Some(room), Some(home)) = (room, catalog::goal_room(goal)) {
        if room.eq_ignore_ascii_case(home) {
            if d > 1.0 {
                d = 1.0;
                reason = format!("Because the {goal} belongs in the {room}.");
            }
        } else if d < 6.0 {
            d = 6.0;
            reason = format!("Because the {goal} is rarely in the {room}.");
        }
    }
    (d, reason)
}

fn flat_text_nodes(payload: &str) -> (Vec<String>, String) {
    let (scene, goal) = payload.rsplit_once("\nGoal: ").unwrap_or((payload, ""));
    let objects = scene.strip_prefix("objects: ").unwrap_or(scene);
    let objects = objects.split("; relations: ").next().unwrap_or("");
    (objects.split(", ").map(str::to_string).collect(), goal.trim().to_string())
}

impl LlmBackend for PriorOracleLlm {
    fn complete(&self, req: &CompletionRequest) -> Result<String, LlmError> {
        let Some((kind, payload)) = PromptKind::classify(&req.prompt) else {
            return Err(LlmError::Malformed("prompt does not match any template".into()));
        };
        let out = match kind {
            PromptKind::EdgeConnecting => {
                let pairs = slot(payload)?;
                let pairs = pairs.as_array().ok_or_else(|| LlmError::Malformed("pair list expected".into()))?;
                let rels = pairs
                    .iter()
                    .map(|p| Ok(json!({"relationships": relation_for(field(p, "object1")?, field(p, "object2")?)})))
                    .collect::<Result<Vec<_>, LlmError>>()?;
                Value::Array(rels)
            }
            PromptKind::ObjectDistance => {
                let v = slot(payload)?;
                let (o, g) = (field(&v, "object1")?, field(&v, "object2")?);
                let d = catalog::prior_distance(o, g);
                json!({"distance": d, "reason": format!("Because {g} is usually about {d} meters from the {o}.")})
            }
            PromptKind::AskQuestion => {
                let v = slot(payload)?;
                let (o, g) = (field(&v, "object")?, field(&v, "goal")?);
                let q = match catalog::companion_of(g) {
                    Some(c) if !c.eq_ignore_ascii_case(o) => format!("Is there a {c} next to the {o}?"),
                    _ => format!("Is there a {g} near the {o}?"),
                };
                json!({ "question": q })
            }
            PromptKind::AnswerQuestion => {
                let v = slot(payload)?;
                let q = field(&v, "question")?;
                let nodes = node_list(v.get("subgraph").unwrap_or(&Value::Null));
                let asked = q
                    .strip_prefix("Is there a ")
                    .and_then(|r| r.split(" next to ").next().filter(|s| *s != r).or_else(|| r.split(" near ").next()))
                    .unwrap_or("");
                let yes = nodes.iter().any(|n| n.eq_ignore_ascii_case(asked));
                json!({"answer": if yes { "Yes" } else { "No" }})
            }
            PromptKind::SubgraphDistance => {
                let v = slot(payload)?;
                let g = field(&v, "goal")?;
                let (d, reason) = subgraph_distance(&node_list(v.get("subgraph").unwrap_or(&Value::Null)), g);
                json!({"distance": d, "reason": reason})
            }
            PromptKind::FlatText => {
                let (nodes, goal) = flat_text_nodes(&req.prompt[FLAT_TEXT_PREAMBLE.len()..]);
                let (d, reason) = subgraph_distance(&nodes, &goal);
                json!({"distance": d, "reason": reason})
            }
            PromptKind::Explanation => {
                let goal = payload.lines().next().and_then(|l| l.strip_prefix("Goal: ")).unwrap_or("goal");
                let reasons: Vec<&str> = payload.lines().skip(1).filter_map(|l| l.split_once(". ").map(|x| x.1)).collect();
                return Ok(format!("This frontier is the most promising way to the {goal}. {}", reasons.join(" ")));
            }
        };
        Ok(serde_json::to_string(&out).expect("json serializes"))
    }

    fn name(&self) -> &str {
        "prior-oracle"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{parse_structured, ResponseShape, Structured};
    use crate::prompts::*;

    fn ask(p: String, shape: ResponseShape) -> Structured {
        let r = PriorOracleLlm.complete(&CompletionRequest::new(p)).unwrap();
        parse_structured(&r, shape).unwrap()
    }

    #[test]
    fn edges_follow_companionship() {
        let r = ask(edge_prompt(&[("bed", "nightstand"), ("sofa", "plant"), ("stove", "bed")]), ResponseShape::Relations);
        assert_eq!(r, Structured::Relations(vec!["next to".into(), "near".into(), "opposite to".into()]));
    }

    #[test]
    fn four_steps_for_a_bedroom_subgraph() {
        assert_eq!(
            ask(object_distance_prompt("wardrobe", "bed"), ResponseShape::Distance),
            Structured::Distance { distance: 1.5, reason: "Because bed is usually about 1.5 meters from the wardrobe.".into() }
        );
        let Structured::Question(q) = ask(ask_question_prompt("wardrobe", "bed"), ResponseShape::Question) else { panic!() };
        assert_eq!(q, "Is there a nightstand next to the wardrobe?");
        let sg = SubgraphText { nodes: vec!["wardrobe".into(), "nightstand".into(), "bedroom".into()], edges: vec![] };
        assert_eq!(ask(answer_question_prompt(&sg, &q), ResponseShape::Answer), Structured::Answer("Yes".into()));
        let Structured::Distance { distance, .. } = ask(subgraph_distance_prompt(&sg, "bed"), ResponseShape::Distance) else {
            panic!()
        };
        assert_eq!(distance, 0.5);
    }

    #[test]
    fn wrong_room_pushes_distance_out() {
        let sg = SubgraphText { nodes: vec!["lamp".into(), "office".into()], edges: vec![] };
        let Structured::Distance { distance, .. } = ask(subgraph_distance_prompt(&sg, "bed"), ResponseShape::Distance) else {
            panic!()
        };
        assert_eq!(distance, 6.0);
        let Structured::Distance { distance, .. } = ask(flat_text_prompt(&sg, "bed"), ResponseShape::Distance) else { panic!() };
        assert_eq!(distance, 6.0);
    }

    #[test]
    fn answer_no_when_absent() {
        let sg = SubgraphText { nodes: vec!["sofa".into()], edges: vec![] };
        assert_eq!(
            ask(answer_question_prompt(&sg, "Is there a tv near the sofa?"), ResponseShape::Answer),
            Structured::Answer("No".into())
        );
    }

    #[test]
    fn unknown_prompt_is_an_error() {
        assert!(PriorOracleLlm.complete(&CompletionRequest::new("hello")).is_err());
    }
}
