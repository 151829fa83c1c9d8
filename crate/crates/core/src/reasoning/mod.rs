//! Goal inference: chain-of-thought distance prediction per subgraph,
//! frontier scoring, and the credibility test for goal candidates.

mod cache;
mod cot;
mod credibility;
mod explain;

pub use cache::{content_key, CachedScore, ScoreCache};
pub use cot::{cot_predict_distance, flat_predict_distance, CotOutcome, Fallback, FALLBACK_DISTANCE_M};
pub use credibility::{credibility_step, reperception_verdict, CredibilityError, CredibilityState, Verdict, N_MAX, S_THRES};
pub use explain::{explain_decision, Explanation, EXPLANATION_FANOUT};

use crate::geometry::Vec2;
use crate::scene_graph::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest predicted distance used when inverting it.
pub const MIN_PREDICTED_DISTANCE_M: f64 = 0.1;
/// Smallest frontier-to-object (or object-to-candidate) distance used as a
/// denominator.
pub const MIN_TERM_DISTANCE_M: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReasoningError {
    #[error("predicted distance {0} is negative")]
    NegativeDistance(f64),
}

/// Weight of a subgraph: the inverse of its predicted distance to the goal.
pub fn subgraph_probability(distance: f64) -> Result<f64, ReasoningError> {
    if distance < 0.0 || distance.is_nan() {
        return Err(ReasoningError::NegativeDistance(distance));
    }
    Ok(1.0 / distance.max(MIN_PREDICTED_DISTANCE_M))
}

/// A scored subgraph as seen by the frontier and credibility sums.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgraphScore {
    pub subgraph: NodeId,
    pub predicted_distance: f64,
    pub p_sub: f64,
    /// Position of the central object.
    pub center: Vec2,
    pub reason: String,
    pub fallback: Option<Fallback>,
    pub graph_revision: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierTarget {
    pub id: usize,
    pub centroid: Vec2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTerm {
    pub subgraph: NodeId,
    pub distance: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierScore {
    pub frontier: usize,
    pub score: f64,
    pub terms: Vec<ScoreTerm>,
}

fn term_distance(a: Vec2, b: Vec2) -> f64 {
    a.dist(b).max(MIN_TERM_DISTANCE_M)
}

/// Each frontier's score is the sum over subgraphs of `p_sub / D`, where `D`
/// is the Euclidean distance from the frontier centroid to the subgraph's
/// central object, clamped below at [`MIN_TERM_DISTANCE_M`].
pub fn score_frontiers(frontiers: &[FrontierTarget], scores: &[SubgraphScore]) -> Vec<FrontierScore> {
    frontiers
        .iter()
        .map(|f| {
            let terms: Vec<ScoreTerm> = scores
                .iter()
                .map(|s| {
                    let distance = term_distance(f.centroid, s.center);
                    ScoreTerm { subgraph: s.subgraph, distance, value: s.p_sub / distance }
                })
                .collect();
            FrontierScore { frontier: f.id, score: terms.iter().map(|t| t.value).sum(), terms }
        })
        .collect()
}

/// Highest score wins. Scores within a relative 1e-9 of each other tie, and
/// ties go to the frontier nearer the agent, then the smaller id.
pub fn select_frontier(scores: &[FrontierScore], distance_to_agent: impl Fn(usize) -> f64) -> Option<usize> {
    let best = scores.iter().map(|s| s.score).fold(f64::NEG_INFINITY, f64::max);
    let tol = best.abs() * 1e-9;
    scores
        .iter()
        .filter(|s| s.score >= best - tol)
        .map(|s| (distance_to_agent(s.frontier), s.frontier))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map(|(_, id)| id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sub(id: NodeId, p_sub: f64, x: f64) -> SubgraphScore {
        SubgraphScore {
            subgraph: id,
            predicted_distance: 1.0 / p_sub,
            p_sub,
            center: Vec2::new(x, 0.0),
            reason: String::new(),
            fallback: None,
            graph_revision: 0,
        }
    }

    #[test]
    fn probability_examples() {
        assert_eq!(subgraph_probability(2.0), Ok(0.5));
        assert_eq!(subgraph_probability(0.5), Ok(2.0));
        assert_eq!(subgraph_probability(0.0), Ok(10.0));
        assert!(subgraph_probability(-1.0).is_err());
    }

    #[test]
    fn frontier_score_examples() {
        let f = [FrontierTarget { id: 0, centroid: Vec2::default() }];
        assert_eq!(score_frontiers(&f, &[sub(1, 0.5, 2.0)])[0].score, 0.25);
        assert_eq!(score_frontiers(&f, &[sub(1, 1.0, 1.0), sub(2, 0.5, 2.0)])[0].score, 1.25);
        assert_eq!(score_frontiers(&f, &[])[0].score, 0.0);
        assert_eq!(score_frontiers(&f, &[sub(1, 1.0, 0.1)])[0].terms[0].distance, 0.5);
    }

    #[test]
    fn selection_examples() {
        let s = |f: usize, score: f64| FrontierScore { frontier: f, score, terms: vec![] };
        assert_eq!(select_frontier(&[s(1, 0.3), s(2, 0.7)], |_| 1.0), Some(2));
        assert_eq!(select_frontier(&[s(1, 0.5), s(2, 0.5)], |f| if f == 1 { 1.0 } else { 2.0 }), Some(1));
        assert_eq!(select_frontier(&[s(3, 0.0), s(2, 0.0)], |_| 1.0), Some(2));
        assert_eq!(select_frontier(&[], |_| 1.0), None);
    }

    proptest! {
        #[test]
        fn probability_strictly_decreasing(a in 0.1f64..100.0, b in 0.1f64..100.0) {
            prop_assume!(a < b);
            prop_assert!(subgraph_probability(a).unwrap() > subgraph_probability(b).unwrap());
        }
    }
}
