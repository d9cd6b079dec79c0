//! Domain types shared by every mechanism: budgets, valuations, instances,
//! outcomes, budgeted utility, and the liquid-welfare objective.
//!
//! Conventions used across the crate:
//!
//! - Supply is normalized to one divisible unit at validation time;
//!   allocations are vectors `x` with `Σ xᵢ ≤ 1`.
//! - Budgets may be [`Budget::Infinite`]; infinity is a symbolic variant,
//!   never a large float sentinel, so `min(v, B)` and demand comparisons
//!   are exact.
//! - Utility is budgeted quasi-linear: `v(x) − π` while `π ≤ B`, and
//!   `−∞` (as [`f64::NEG_INFINITY`]) once the payment exceeds the budget.
//! - Ties between equal values are broken by bidder index everywhere
//!   (lower index wins), equivalent to perturbing value `vᵢ` down by an
//!   infinitesimal multiple of `i`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Solver-internal comparison tolerance (feasibility sums, event residuals).
pub const TOL_SOLVER: f64 = 1e-9;

/// Tolerance for audit verdicts; separates quadrature/integration error
/// from genuine property violations.
pub const TOL_AUDIT: f64 = 1e-6;

/// Width to which bisection localizes events and quadrature localizes
/// discontinuities.
pub const TOL_BISECT: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("instance has no bidders")]
    EmptyInstance,
    #[error("negative value: {0}")]
    NegativeValue(String),
    #[error("valuation of bidder {0} is not monotone non-decreasing")]
    NonMonotoneValuation(usize),
    #[error("valuation of bidder {0} is flagged concave but its slopes increase")]
    ConcavityFlagViolated(usize),
    #[error("allocation sums to {0}, exceeding the unit supply")]
    InfeasibleAllocation(f64),
}

/// A bidder's spending limit. `Infinite` compares greater than every
/// finite amount and never caps a value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Finite(f64),
    Infinite,
}

impl Budget {
    pub fn is_infinite(self) -> bool {
        matches!(self, Budget::Infinite)
    }

    /// Finite amount, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Budget::Finite(b) => Some(b),
            Budget::Infinite => None,
        }
    }

    /// `min(v, B)` — the capped amount this budget admits to pay.
    pub fn cap(self, v: f64) -> f64 {
        match self {
            Budget::Finite(b) => v.min(b),
            Budget::Infinite => v,
        }
    }

    /// Whether a payment is affordable: `pay ≤ B + tol`.
    pub fn allows(self, pay: f64, tol: f64) -> bool {
        match self {
            Budget::Finite(b) => pay <= b + tol,
            Budget::Infinite => true,
        }
    }

    /// `B ≥ v` with the infinite variant greater than everything.
    pub fn at_least(self, v: f64) -> bool {
        match self {
            Budget::Finite(b) => b >= v,
            Budget::Infinite => true,
        }
    }

    /// Remaining headroom after paying `spent`; `Infinite` stays infinite.
    pub fn minus(self, spent: f64) -> Budget {
        match self {
            Budget::Finite(b) => Budget::Finite((b - spent).max(0.0)),
            Budget::Infinite => Budget::Infinite,
        }
    }

    /// Budget-limited demand `B/p` at a positive price, as an IEEE float
    /// (`+∞` for the infinite variant). At `p = 0` the demand is `+∞`
    /// whenever any money remains and `0` otherwise.
    pub fn demand_at(self, p: f64) -> f64 {
        match self {
            Budget::Finite(b) => {
                if p > 0.0 {
                    b / p
                } else if b > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Budget::Infinite => f64::INFINITY,
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Budget::Finite(b) => ser.serialize_f64(*b),
            Budget::Infinite => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Budget;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a non-negative number or the string \"inf\"")
            }
            fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Budget, E> {
                Ok(Budget::Finite(v))
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Budget, E> {
                Ok(Budget::Finite(v as f64))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Budget, E> {
                Ok(Budget::Finite(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Budget, E> {
                if v == "inf" {
                    Ok(Budget::Infinite)
                } else {
                    Err(E::custom(format!("unknown budget string {v:?}")))
                }
            }
        }
        de.deserialize_any(V)
    }
}

/// How a bidder values quantity. Curves are exact piecewise-linear
/// interpolations — no smoothing — so demand oracles stay exact on
/// breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Valuation {
    /// `v(q) = rate · q`.
    Additive { rate: f64 },
    /// Monotone piecewise-linear curve through `points`, starting at
    /// `(0, 0)`; beyond the last breakpoint it extends at the final
    /// segment's slope (the quantity domain is `[0, 1]`). `concave`
    /// asserts non-increasing segment slopes and is verified at
    /// validation.
    PiecewiseLinear { points: Vec<(f64, f64)>, concave: bool },
}

impl Valuation {
    pub fn additive(rate: f64) -> Valuation {
        Valuation::Additive { rate }
    }

    pub fn piecewise(points: Vec<(f64, f64)>, concave: bool) -> Valuation {
        Valuation::PiecewiseLinear { points, concave }
    }

    pub fn is_additive(&self) -> bool {
        matches!(self, Valuation::Additive { .. })
    }

    /// Additive per-unit rate, if this valuation is additive.
    pub fn additive_rate(&self) -> Option<f64> {
        match self {
            Valuation::Additive { rate } => Some(*rate),
            Valuation::PiecewiseLinear { .. } => None,
        }
    }

    /// Exact value at quantity `q` (clamped into `[0, 1]`).
    pub fn value_at(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Valuation::Additive { rate } => rate * q,
            Valuation::PiecewiseLinear { points, .. } => {
                if points.is_empty() {
                    return 0.0;
                }
                // Walk to the segment containing q; extend past the end
                // at the last slope.
                let mut prev = (0.0, 0.0);
                for &(bq, bv) in points {
                    if q <= bq {
                        if bq <= prev.0 {
                            return bv;
                        }
                        let t = (q - prev.0) / (bq - prev.0);
                        return prev.1 + t * (bv - prev.1);
                    }
                    prev = (bq, bv);
                }
                let last = *points.last().unwrap();
                let slope = last_segment_slope(points);
                last.1 + slope * (q - last.0)
            }
        }
    }

    /// Quantity breakpoints where the curve can kink (empty for additive).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Valuation::Additive { .. } => Vec::new(),
            Valuation::PiecewiseLinear { points, .. } => points.iter().map(|p| p.0).collect(),
        }
    }

    /// Steepest segment slope; bounds the grid-DP discretization error.
    pub fn max_slope(&self) -> f64 {
        match self {
            Valuation::Additive { rate } => *rate,
            Valuation::PiecewiseLinear { points, .. } => {
                let mut best: f64 = 0.0;
                let mut prev = (0.0, 0.0);
                for &(bq, bv) in points {
                    if bq > prev.0 {
                        best = best.max((bv - prev.1) / (bq - prev.0));
                    }
                    prev = (bq, bv);
                }
                best
            }
        }
    }

    /// The valuation scaled by a multiplicative factor on the value axis
    /// (used for misreport deviations).
    pub fn scaled(&self, factor: f64) -> Valuation {
        match self {
            Valuation::Additive { rate } => Valuation::Additive { rate: rate * factor },
            Valuation::PiecewiseLinear { points, concave } => Valuation::PiecewiseLinear {
                points: points.iter().map(|&(q, v)| (q, v * factor)).collect(),
                concave: *concave,
            },
        }
    }

    fn check(&self, idx: usize) -> Result<(), ModelError> {
        match self {
            Valuation::Additive { rate } => {
                if !rate.is_finite() || *rate < 0.0 {
                    return Err(ModelError::NegativeValue(format!("bidder {idx} rate {rate}")));
                }
            }
            Valuation::PiecewiseLinear { points, concave } => {
                let mut prev = (0.0, 0.0);
                if let Some(&(q0, v0)) = points.first() {
                    if q0 != 0.0 || v0 != 0.0 {
                        return Err(ModelError::NonMonotoneValuation(idx));
                    }
                }
                let mut prev_slope = f64::INFINITY;
                for (j, &(q, v)) in points.iter().enumerate() {
                    if !q.is_finite() || !v.is_finite() || q < 0.0 || v < 0.0 {
                        return Err(ModelError::NegativeValue(format!(
                            "bidder {idx} breakpoint {j}"
                        )));
                    }
                    if j > 0 {
                        if q <= prev.0 || v < prev.1 {
                            return Err(ModelError::NonMonotoneValuation(idx));
                        }
                        let slope = (v - prev.1) / (q - prev.0);
                        if *concave && slope > prev_slope + TOL_SOLVER {
                            return Err(ModelError::ConcavityFlagViolated(idx));
                        }
                        prev_slope = slope;
                    }
                    prev = (q, v);
                }
            }
        }
        Ok(())
    }
}

fn last_segment_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let a = points[points.len() - 2];
    let b = points[points.len() - 1];
    if b.0 > a.0 {
        (b.1 - a.1) / (b.0 - a.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bidder {
    pub valuation: Valuation,
    pub budget: Budget,
}

impl Bidder {
    pub fn additive(rate: f64, budget: Budget) -> Bidder {
        Bidder { valuation: Valuation::additive(rate), budget }
    }

    /// `min(v(q), B)` — the capped value this bidder admits to pay for `q`.
    pub fn capped_value(&self, q: f64) -> f64 {
        self.budget.cap(self.valuation.value_at(q))
    }
}

/// A validated auction instance: bidders over one normalized unit of a
/// divisible good.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    bidders: Vec<Bidder>,
}

impl Instance {
    /// Validate a raw instance and normalize its supply to 1.
    ///
    /// Additive rates are per unit of raw supply, so they rescale by
    /// `supply`; piecewise-linear curves are already defined over the
    /// fraction-of-supply domain `[0, 1]` and are left untouched.
    pub fn validate(supply: f64, bidders: Vec<Bidder>) -> Result<Instance, ModelError> {
        if bidders.is_empty() {
            return Err(ModelError::EmptyInstance);
        }
        if !supply.is_finite() || supply <= 0.0 {
            return Err(ModelError::NegativeValue(format!("supply {supply}")));
        }
        let mut normalized = Vec::with_capacity(bidders.len());
        for (idx, bidder) in bidders.into_iter().enumerate() {
            bidder.valuation.check(idx)?;
            if let Budget::Finite(b) = bidder.budget {
                if !b.is_finite() || b < 0.0 {
                    return Err(ModelError::NegativeValue(format!("bidder {idx} budget {b}")));
                }
            }
            let valuation = if supply != 1.0 {
                match bidder.valuation {
                    Valuation::Additive { rate } => Valuation::Additive { rate: rate * supply },
                    pl => pl,
                }
            } else {
                bidder.valuation
            };
            normalized.push(Bidder { valuation, budget: bidder.budget });
        }
        Ok(Instance { bidders: normalized })
    }

    /// Convenience constructor for additive unit-supply instances; panics
    /// on invalid input (test and generator use).
    pub fn additive(rates: &[f64], budgets: &[Budget]) -> Instance {
        assert_eq!(rates.len(), budgets.len(), "rates/budgets length mismatch");
        let bidders = rates
            .iter()
            .zip(budgets)
            .map(|(&rate, &budget)| Bidder::additive(rate, budget))
            .collect();
        Instance::validate(1.0, bidders).expect("invalid additive instance")
    }

    pub fn n(&self) -> usize {
        self.bidders.len()
    }

    pub fn bidders(&self) -> &[Bidder] {
        &self.bidders
    }

    pub fn bidder(&self, i: usize) -> &Bidder {
        &self.bidders[i]
    }

    /// Additive rates for all bidders, or `None` if any valuation is curved.
    pub fn additive_rates(&self) -> Option<Vec<f64>> {
        self.bidders.iter().map(|b| b.valuation.additive_rate()).collect()
    }

    pub fn budgets(&self) -> Vec<Budget> {
        self.bidders.iter().map(|b| b.budget).collect()
    }

    /// A copy with bidder `i`'s valuation scaled by `factor` (misreports).
    pub fn with_scaled_value(&self, i: usize, factor: f64) -> Instance {
        let mut bidders = self.bidders.clone();
        bidders[i].valuation = bidders[i].valuation.scaled(factor);
        Instance { bidders }
    }

    /// A copy with bidder `i`'s budget scaled by `factor`; infinite
    /// budgets are left unchanged.
    pub fn with_scaled_budget(&self, i: usize, factor: f64) -> Instance {
        let mut bidders = self.bidders.clone();
        if let Budget::Finite(b) = bidders[i].budget {
            bidders[i].budget = Budget::Finite(b * factor);
        }
        Instance { bidders }
    }
}

/// Bidder indices sorted by descending value, ties by ascending index
/// (the deterministic stand-in for infinitesimally perturbed values).
pub fn rank_by_value_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b))
    });
    order
}

/// Mechanism-specific diagnostics carried on an [`Outcome`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Diagnostics {
    None,
    /// Price interval over which the clinching auction allocated.
    Clinching { interval: (f64, f64) },
    /// Market-clearing summary: prefix size, case label, clearing price.
    Clearing { k: usize, case: String, price: f64 },
    /// Posted-price pivot decision.
    Pivot { pivot: usize, runner_up: usize, took_half: bool, guard_bound: bool },
    /// Item matched to each agent.
    Matching { assignment: Vec<usize> },
    /// Single winner (second-price and random baselines).
    Winner { winner: usize },
}

/// Allocation and payments produced by a mechanism run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub allocation: Vec<f64>,
    pub payments: Vec<f64>,
    pub mechanism: String,
    pub diagnostics: Diagnostics,
}

impl Outcome {
    pub fn new(mechanism: &str, allocation: Vec<f64>, payments: Vec<f64>) -> Outcome {
        Outcome {
            allocation,
            payments,
            mechanism: mechanism.to_string(),
            diagnostics: Diagnostics::None,
        }
    }

    pub fn with_diagnostics(mut self, diagnostics: Diagnostics) -> Outcome {
        self.diagnostics = diagnostics;
        self
    }

    /// Total revenue `Σ πᵢ`.
    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }
}

/// Budgeted quasi-linear utility: `v(x) − pay` while `pay ≤ B`, else `−∞`.
pub fn utility(valuation: &Valuation, budget: Budget, x: f64, pay: f64) -> f64 {
    if !budget.allows(pay, 0.0) {
        return f64::NEG_INFINITY;
    }
    valuation.value_at(x) - pay
}

/// `min(v(q), B)` for a free-standing valuation/budget pair.
pub fn capped_value(valuation: &Valuation, budget: Budget, q: f64) -> f64 {
    budget.cap(valuation.value_at(q))
}

/// Liquid welfare `Σᵢ min(vᵢ(xᵢ), Bᵢ)` of a feasible allocation.
pub fn liquid_welfare(instance: &Instance, allocation: &[f64]) -> Result<f64, ModelError> {
    assert_eq!(allocation.len(), instance.n(), "allocation length mismatch");
    let total: f64 = allocation.iter().sum();
    if total > 1.0 + TOL_SOLVER {
        return Err(ModelError::InfeasibleAllocation(total));
    }
    Ok(instance
        .bidders
        .iter()
        .zip(allocation)
        .map(|(b, &x)| b.capped_value(x))
        .sum())
}
