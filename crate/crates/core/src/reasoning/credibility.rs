use super::{SubgraphScore, MIN_TERM_DISTANCE_M};
use crate::geometry::Vec2;
use crate::scene_graph::NodeId;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Credibility a candidate must accumulate to be accepted.
pub const S_THRES: f64 = 0.8;
/// Observations after which an unaccepted candidate is given up.
pub const N_MAX: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Continue,
    Reject,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CredibilityError {
    #[error("candidate already observed {0} times")]
    Overflow(u32),
    #[error("confidence {0} outside [0, 1]")]
    Confidence(f64),
}

/// Running credibility of one goal candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredibilityState {
    pub candidate: NodeId,
    pub cumulative: f64,
    pub observations: u32,
    pub s_thres: f64,
    pub n_max: u32,
    /// Observation count at which the cumulative score first reached the
    /// threshold.
    pub crossed_at: Option<u32>,
    /// Per-observation scores, oldest first.
    pub history: Vec<f64>,
}

impl CredibilityState {
    pub fn new(candidate: NodeId) -> Self {
        Self::with_limits(candidate, S_THRES, N_MAX)
    }

    pub fn with_limits(candidate: NodeId, s_thres: f64, n_max: u32) -> Self {
        Self { candidate, cumulative: 0.0, observations: 0, s_thres, n_max, crossed_at: None, history: Vec::new() }
    }

    /// Adds an already computed observation score.
    pub fn push(&mut self, s_k: f64) -> Result<(), CredibilityError> {
        if self.observations >= self.n_max {
            return Err(CredibilityError::Overflow(self.observations));
        }
        self.cumulative += s_k.max(0.0);
        self.observations += 1;
        self.history.push(s_k);
        if self.crossed_at.is_none() && self.cumulative >= self.s_thres {
            self.crossed_at = Some(self.observations);
        }
        Ok(())
    }
}

/// Score of one observation: the detection confidence times the sum over
/// subgraphs of `p_sub / D`, with `D` the distance from the subgraph's
/// central object to the candidate, clamped below at 0.5 m. The state is
/// updated and the observation score returned.
pub fn credibility_step(
    state: &mut CredibilityState,
    c_k: f64,
    scores: &[SubgraphScore],
    candidate: Vec2,
) -> Result<f64, CredibilityError> {
    if !(0.0..=1.0).contains(&c_k) {
        return Err(CredibilityError::Confidence(c_k));
    }
    let context: f64 = scores.iter().map(|s| s.p_sub / s.center.dist(candidate).max(MIN_TERM_DISTANCE_M)).sum();
    let s_k = c_k * context;
    state.push(s_k)?;
    Ok(s_k)
}

/// Accept once the threshold was reached at an observation count strictly
/// below `n_max`; reject when `n_max` observations pass without that;
/// otherwise keep observing.
pub fn reperception_verdict(state: &CredibilityState) -> Verdict {
    match state.crossed_at {
        Some(n) if n < state.n_max => Verdict::Accept,
        _ if state.observations >= state.n_max => Verdict::Reject,
        _ => Verdict::Continue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(p_sub: f64, x: f64) -> SubgraphScore {
        SubgraphScore {
            subgraph: 0,
            predicted_distance: 1.0 / p_sub,
            p_sub,
            center: Vec2::new(x, 0.0),
            reason: String::new(),
            fallback: None,
            graph_revision: 0,
        }
    }

    #[test]
    fn single_term() {
        let mut s = CredibilityState::new(1);
        assert_eq!(credibility_step(&mut s, 1.0, &[sub(0.8, 1.0)], Vec2::default()), Ok(0.8));
        assert_eq!(s.cumulative, 0.8);
        assert_eq!(reperception_verdict(&s), Verdict::Accept);
    }

    #[test]
    fn zero_confidence_adds_nothing() {
        let mut s = CredibilityState::new(1);
        assert_eq!(credibility_step(&mut s, 0.0, &[sub(0.8, 1.0)], Vec2::default()), Ok(0.0));
        assert_eq!(s.cumulative, 0.0);
        assert_eq!(s.observations, 1);
        assert_eq!(reperception_verdict(&s), Verdict::Continue);
    }

    #[test]
    fn two_terms() {
        let mut s = CredibilityState::new(1);
        let v = credibility_step(&mut s, 0.5, &[sub(1.0, 1.0), sub(0.6, 2.0)], Vec2::default()).unwrap();
        assert!((v - 0.65).abs() < 1e-12);
    }

    #[test]
    fn accumulates_to_accept() {
        let mut s = CredibilityState::new(1);
        s.push(0.5).unwrap();
        assert_eq!(reperception_verdict(&s), Verdict::Continue);
        s.push(0.4).unwrap();
        assert_eq!(s.crossed_at, Some(2));
        assert_eq!(reperception_verdict(&s), Verdict::Accept);
    }

    #[test]
    fn weak_evidence_is_rejected() {
        let mut s = CredibilityState::new(1);
        for _ in 0..10 {
            assert_eq!(reperception_verdict(&s), Verdict::Continue);
            s.push(0.05).unwrap();
        }
        assert_eq!(reperception_verdict(&s), Verdict::Reject);
        assert_eq!(s.push(0.05), Err(CredibilityError::Overflow(10)));
        assert!((s.cumulative - 0.5).abs() < 1e-12);
    }

    #[test]
    fn crossing_at_n_max_is_rejected() {
        let mut s = CredibilityState::new(1);
        for _ in 0..9 {
            s.push(0.0).unwrap();
        }
        s.push(0.8).unwrap();
        assert_eq!(s.crossed_at, Some(10));
        assert_eq!(reperception_verdict(&s), Verdict::Reject);
    }

    #[test]
    fn confidence_is_validated() {
        let mut s = CredibilityState::new(1);
        assert_eq!(credibility_step(&mut s, 1.5, &[], Vec2::default()), Err(CredibilityError::Confidence(1.5)));
    }
}
