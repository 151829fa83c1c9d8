use super::cot::{CotOutcome, Fallback};
use crate::prompts::SubgraphText;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;

/// Hex digest identifying a subgraph's prompt content for one goal.
///
/// Two subgraphs with the same rendered nodes and edges produce the same
/// prompts, so their reasoning can be shared no matter which revision of the
/// graph they came from.
pub fn content_key(text: &SubgraphText, goal: &str, flat: bool) -> String {
    let mut h = Sha256::new();
    h.update(text.to_json().as_bytes());
    h.update([0u8]);
    h.update(goal.as_bytes());
    h.update([u8::from(flat)]);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CachedScore {
    pub distance: f64,
    pub reason: String,
    pub fallback: Option<Fallback>,
}

/// Reasoning results keyed by [`content_key`].
#[derive(Clone, Debug, Default)]
pub struct ScoreCache {
    entries: BTreeMap<String, CachedScore>,
    pub hits: usize,
    pub misses: usize,
}

impl ScoreCache {
    pub fn get(&mut self, key: &str) -> Option<&CachedScore> {
        let hit = self.entries.get(key);
        if hit.is_some() {
            self.hits += 1;
        } else {
            self.misses += 1;
        }
        hit
    }

    pub fn insert(&mut self, key: String, outcome: &CotOutcome) {
        self.entries.insert(
            key,
            CachedScore { distance: outcome.distance, reason: outcome.reason.clone(), fallback: outcome.fallback },
        );
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::Transcript;

    #[test]
    fn key_depends_on_content_and_goal() {
        let a = SubgraphText { nodes: vec!["sofa".into()], edges: vec![] };
        let b = SubgraphText { nodes: vec!["sofa".into(), "table".into()], edges: vec![] };
        assert_eq!(content_key(&a, "tv", false), content_key(&a.clone(), "tv", false));
        assert_ne!(content_key(&a, "tv", false), content_key(&b, "tv", false));
        assert_ne!(content_key(&a, "tv", false), content_key(&a, "bed", false));
        assert_ne!(content_key(&a, "tv", false), content_key(&a, "tv", true));
    }

    #[test]
    fn counts_hits_and_misses() {
        let mut c = ScoreCache::default();
        assert!(c.get("k").is_none());
        let o = CotOutcome { distance: 2.0, reason: "r".into(), fallback: None, transcript: Transcript::default() };
        c.insert("k".into(), &o);
        assert_eq!(c.get("k").unwrap().distance, 2.0);
        assert_eq!((c.hits, c.misses), (1, 1));
    }
}
