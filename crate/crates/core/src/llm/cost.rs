//! Cost model comparing one batched edge-proposal prompt with one prompt per
//! node pair, where processing `L` tokens costs `L^r`.

use serde::{Deserialize, Serialize};

/// Constant claimed for the ratio bound `t_our / t_naive < c / (m + n)`.
pub const PUBLISHED_BOUND_CONSTANT: f64 = 5.49;

/// Ranges the bound is claimed for.
pub const SWEEP_M: std::ops::RangeInclusive<u32> = 1..=5;
pub const SWEEP_N: std::ops::RangeInclusive<u32> = 1..=100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// Prompt tokens.
    pub l_pro: f64,
    /// Response tokens per pair.
    pub l_res: f64,
    /// Complexity exponent, in (1, 2].
    pub r: f64,
}

impl CostModel {
    pub fn from_alpha(l_pro: f64, alpha: f64, r: f64) -> Self {
        assert!(r > 1.0 && r <= 2.0, "complexity exponent must lie in (1, 2]");
        Self { l_pro, l_res: alpha * l_pro, r }
    }

    pub fn alpha(&self) -> f64 {
        self.l_res / self.l_pro
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub t_our: f64,
    pub t_naive: f64,
    pub ratio: f64,
}

/// `t_our = (L_pro + P L_res + 2P)^r`, `t_naive = P (L_pro + L_res)^r` with
/// `P = m (m + n)` pairs. The two formatting tokens per pair are kept.
pub fn estimate_cost(model: &CostModel, m: u32, n: u32) -> CostEstimate {
    let pairs = m as f64 * (m as f64 + n as f64);
    let t_our = (model.l_pro + pairs * model.l_res + pairs * 2.0).powf(model.r);
    let t_naive = pairs * (model.l_pro + model.l_res).powf(model.r);
    CostEstimate { t_our, t_naive, ratio: t_our / t_naive }
}

/// The coefficient as simplified in the published derivation:
/// `(alpha (m^2 + m n - 1))^r / m`. At `m = 5, n = 100, alpha = 0.01, r = 2`
/// this is `5.24^2 / 5`.
pub fn published_coefficient(m: u32, n: u32, alpha: f64, r: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    (alpha * (m * m + m * n - 1.0)).powf(r) / m
}

/// The same coefficient without dropping the leading 1:
/// `(1 + (m^2 + m n - 1) alpha)^r / m`.
pub fn exact_coefficient(m: u32, n: u32, alpha: f64, r: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    (1.0 + (m * m + m * n - 1.0) * alpha).powf(r) / m
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub m: u32,
    pub n: u32,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub constant: f64,
    pub points: usize,
    pub violations: usize,
    pub first_violation: Option<BoundPoint>,
    /// Largest `ratio * (m + n)` seen, i.e. the smallest constant that would hold.
    pub tightest_constant: f64,
}

impl BoundCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Checks `ratio < c / (m + n)` at every `(m, n)` of the standard sweep.
pub fn verify_complexity_bound(model: &CostModel, c: f64) -> BoundCheck {
    let mut check = BoundCheck { constant: c, points: 0, violations: 0, first_violation: None, tightest_constant: 0.0 };
    for m in SWEEP_M {
        for n in SWEEP_N {
            let ratio = estimate_cost(model, m, n).ratio;
            let bound = c / (m + n) as f64;
            check.points += 1;
            check.tightest_constant = check.tightest_constant.max(ratio * (m + n) as f64);
            if ratio >= bound {
                check.violations += 1;
                check.first_violation.get_or_insert(BoundPoint { m, n, ratio, bound });
            }
        }
    }
    check
}
