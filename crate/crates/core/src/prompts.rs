//! Prompt templates. Each builder returns the fixed preamble followed by the
//! slot payload rendered as compact JSON with `", "` and `": "` separators.

/// Edge connecting: one prompt for a whole batch of object pairs.
pub const EDGE_PREAMBLE: &str = r#"You are an AI assistant with commonsense and strong ability to infer the spatial relationships in an indoor scene.
You need to provide the possible spatial relationships between several pairs of objects. Relationships include ["next to", "above", "opposite to", "below", "inside", "behind", "in front of", ...].
All the pairs of objects are provided in JSON format, and you should also response in JSON format. Here are 2 examples:
1.
Input:
[{"object1": "chair", "object2": "table"}, {"object1": "monitor", "object2": "desk"}]
Response:
[{"relationships": "next to"}, {"relationships": "above"}]
2.
Input:
[{"object1": "sofa", "object2": "TV"}, {"object1": "plant", "object2": "chair"}]
Response:
[{"relationships": "opposite to"}, {"relationships": "behind"}]
Now you predict these pairs of objects: "#;

/// Step 1: distance between the central object and the goal.
pub const OBJECT_DISTANCE_PREAMBLE: &str = r#"You are an AI assistant with commonsense and strong ability to infer the distance between two objects in an indoor scene.
You need to predict the most likely distance of two objects in a room. You need to answer the distance in meters and give your reason. Here is the JSON format:
Input:
{"object1": "table", "object2": "chair"}
Response:
{"distance": 0.5, "reason": "Because there is always a chair next to the table."}
Now predict the distance and give your reason: "#;

/// Step 2: ask a question relating the object and the goal.
pub const ASK_QUESTION_PREAMBLE: &str = r#"You are an AI assistant with commonsense and strong ability to infer the spatial relationships in an indoor scene.
But you have insufficient information. You need to ask a question about the spatial relationship between the object and the goal in the following JSON format:
Input:
{"object": "sofa", "goal": "TV"}
Response:
{"question": "Is there a table next to the sofa?"}
Now ask question: "#;

/// Step 3: answer the question from the subgraph.
pub const ANSWER_QUESTION_PREAMBLE: &str = r#"You are an AI assistant with commonsense and strong ability to answer question about the objects in an indoor scene.
Given a graph scene of the scene, you need to answer the question in the following JSON format:
Input:
{"subgraph": {"nodes": ["sofa", "table", ...], "edges": ["sofa next to table", ...]}, "question": "Is there a table next to the sofa?"}
Response:
{"answer": "Yes"}
Now answer question: "#;

/// Step 4: distance between the whole subgraph and the goal.
pub const SUBGRAPH_DISTANCE_PREAMBLE: &str = r#"You are an AI assistant with commonsense and strong ability to infer the distance between a subgraph and a goal in an indoor scene.
You need to predict the most likely distance of a subgraph and a goal in a room. You need to answer the distance in meters and give your reason. Here is the JSON format:
Input:
{"subgraph": {"nodes": ["sofa", "table", ...], "edges": ["sofa next to table", ...]}, "goal": "TV"}
Response:
{"distance": 2, "reason": "Because TV and sofa are on both sides of table."}
Now predict the distance and give your reason: "#;

/// Ablation: the subgraph flattened to prose, one prompt, no intermediate steps.
pub const FLAT_TEXT_PREAMBLE: &str = r#"You are an AI assistant with commonsense and strong ability to infer the distance between objects in an indoor scene.
You need to predict the most likely distance between the described part of a scene and a goal. You need to answer the distance in meters and give your reason in the following JSON format:
{"distance": 2, "reason": "..."}
Scene: "#;

pub const EXPLANATION_PREAMBLE: &str = r#"You are an AI assistant that explains navigation decisions in an indoor scene.
The agent chose a frontier to explore. Below are the analyses of the scene subgraphs closest to that frontier. Summarize in two sentences why exploring it is likely to lead to the goal.
"#;

/// JSON string literal for `s`.
pub fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn json_list<S: AsRef<str>>(items: &[S]) -> String {
    let inner: Vec<String> = items.iter().map(|s| quote(s.as_ref())).collect();
    format!("[{}]", inner.join(", "))
}

/// Text form of a subgraph as it appears inside prompts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SubgraphText {
    pub nodes: Vec<String>,
    pub edges: Vec<String>,
}

impl SubgraphText {
    pub fn to_json(&self) -> String {
        format!("{{\"nodes\": {}, \"edges\": {}}}", json_list(&self.nodes), json_list(&self.edges))
    }

    fn to_prose(&self) -> String {
        let mut s = format!("objects: {}", self.nodes.join(", "));
        if !self.edges.is_empty() {
            s.push_str("; relations: ");
            s.push_str(&self.edges.join(", "));
        }
        s
    }
}

pub fn edge_prompt<S: AsRef<str>>(pairs: &[(S, S)]) -> String {
    let items: Vec<String> = pairs
        .iter()
        .map(|(a, b)| format!("{{\"object1\": {}, \"object2\": {}}}", quote(a.as_ref()), quote(b.as_ref())))
        .collect();
    format!("{EDGE_PREAMBLE}[{}]", items.join(", "))
}

pub fn object_distance_prompt(object: &str, goal: &str) -> String {
    format!("{OBJECT_DISTANCE_PREAMBLE}{{\"object1\": {}, \"object2\": {}}}", quote(object), quote(goal))
}

pub fn ask_question_prompt(object: &str, goal: &str) -> String {
    format!("{ASK_QUESTION_PREAMBLE}{{\"object\": {}, \"goal\": {}}}", quote(object), quote(goal))
}

pub fn answer_question_prompt(subgraph: &SubgraphText, question: &str) -> String {
    format!("{ANSWER_QUESTION_PREAMBLE}{{\"subgraph\": {}, \"question\": {}}}", subgraph.to_json(), quote(question))
}

pub fn subgraph_distance_prompt(subgraph: &SubgraphText, goal: &str) -> String {
    format!("{SUBGRAPH_DISTANCE_PREAMBLE}{{\"subgraph\": {}, \"goal\": {}}}", subgraph.to_json(), quote(goal))
}

pub fn flat_text_prompt(subgraph: &SubgraphText, goal: &str) -> String {
    format!("{FLAT_TEXT_PREAMBLE}{}\nGoal: {goal}", subgraph.to_prose())
}

pub fn explanation_prompt(goal: &str, analyses: &[String]) -> String {
    let mut s = format!("{EXPLANATION_PREAMBLE}Goal: {goal}\n");
    for (i, a) in analyses.iter().enumerate() {
        s.push_str(&format!("{}. {a}\n", i + 1));
    }
    s
}

/// Which template a prompt was built from, recognised by its preamble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum PromptKind {
    EdgeConnecting,
    ObjectDistance,
    AskQuestion,
    AnswerQuestion,
    SubgraphDistance,
    FlatText,
    Explanation,
}

impl PromptKind {
    pub fn preamble(self) -> &'static str {
        match self {
            PromptKind::EdgeConnecting => EDGE_PREAMBLE,
            PromptKind::ObjectDistance => OBJECT_DISTANCE_PREAMBLE,
            PromptKind::AskQuestion => ASK_QUESTION_PREAMBLE,
            PromptKind::AnswerQuestion => ANSWER_QUESTION_PREAMBLE,
            PromptKind::SubgraphDistance => SUBGRAPH_DISTANCE_PREAMBLE,
            PromptKind::FlatText => FLAT_TEXT_PREAMBLE,
            PromptKind::Explanation => EXPLANATION_PREAMBLE,
        }
    }

    pub const ALL: [PromptKind; 7] = [
        PromptKind::EdgeConnecting,
        PromptKind::ObjectDistance,
        PromptKind::AskQuestion,
        PromptKind::AnswerQuestion,
        PromptKind::SubgraphDistance,
        PromptKind::FlatText,
        PromptKind::Explanation,
    ];

    /// Splits a prompt into its kind and the slot payload after the preamble.
    pub fn classify(prompt: &str) -> Option<(PromptKind, &str)> {
        Self::ALL.into_iter().find_map(|k| prompt.strip_prefix(k.preamble()).map(|rest| (k, rest)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preambles_are_distinct_prefixes() {
        for a in PromptKind::ALL {
            for b in PromptKind::ALL {
                if a != b {
                    assert!(!a.preamble().starts_with(b.preamble()), "{a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn classify_recovers_slot_payload() {
        let p = ask_question_prompt("sofa", "TV");
        assert_eq!(PromptKind::classify(&p), Some((PromptKind::AskQuestion, r#"{"object": "sofa", "goal": "TV"}"#)));
    }

    #[test]
    fn categories_are_json_escaped() {
        let p = object_distance_prompt("12\" tv", "bed");
        assert!(p.ends_with(r#"{"object1": "12\" tv", "object2": "bed"}"#));
    }
}
