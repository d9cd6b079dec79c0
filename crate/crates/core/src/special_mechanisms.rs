//! Small mechanisms with exact guarantees:
//!
//! - **Capped-value second-price auction** for one indivisible item: run a
//!   second-price auction on v̄ᵢ = min(vᵢ, Bᵢ). Liquid welfare is exactly
//!   optimal for 0/1 allocations, and the price is a rival's capped value,
//!   so budgets are never exceeded.
//! - **Capped-value VCG for matching markets**: max-weight perfect
//!   matching on capped entries v̄ᵢⱼ = min(vᵢⱼ, Bᵢ) with externality
//!   payments; again exactly optimal and budget-feasible.
//! - **Two-bidder 4/3 auction** for one divisible unit and equal budgets
//!   (normalized to 1): a symmetric piecewise rule in the lower value that
//!   guarantees at least 3/4 of the optimal liquid welfare, with payments
//!   from the standard integral.
//! - **Random dump**: give the whole unit to a uniformly random bidder
//!   for free — the classic baseline that already extracts an n-fraction
//!   of welfare and is trivially truthful.

use crate::model::{rank_by_value_desc, Budget, Diagnostics, Outcome};
use crate::myerson::{myerson_payment, AllocationRule, MyersonError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatchingMarketError {
    #[error("matching market requires at least one agent")]
    Empty,
    #[error("value matrix must be square: row {0} has {1} entries, expected {2}")]
    NotSquare(usize, usize, usize),
    #[error("value matrix entries must be finite and non-negative")]
    InvalidEntry,
    #[error("one budget per agent: got {0} budgets for {1} agents")]
    BudgetCount(usize, usize),
}

/// An n-agents × n-items market; agent `i` values item `j` at `values[i][j]`
/// and is liquidity-limited by `budgets[i]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchingMarket {
    pub values: Vec<Vec<f64>>,
    pub budgets: Vec<Budget>,
}

impl MatchingMarket {
    pub fn new(values: Vec<Vec<f64>>, budgets: Vec<Budget>) -> Result<Self, MatchingMarketError> {
        let market = MatchingMarket { values, budgets };
        market.validate()?;
        Ok(market)
    }

    pub fn validate(&self) -> Result<(), MatchingMarketError> {
        let n = self.values.len();
        if n == 0 {
            return Err(MatchingMarketError::Empty);
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != n {
                return Err(MatchingMarketError::NotSquare(i, row.len(), n));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(MatchingMarketError::InvalidEntry);
            }
        }
        if self.budgets.len() != n {
            return Err(MatchingMarketError::BudgetCount(self.budgets.len(), n));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Capped entry v̄ᵢⱼ = min(vᵢⱼ, Bᵢ).
    pub fn capped(&self, i: usize, j: usize) -> f64 {
        self.budgets[i].cap(self.values[i][j])
    }
}

/// Second-price auction on capped values for one indivisible item.
/// The winner is the highest v̄ᵢ = min(vᵢ, Bᵢ) (ties to the lower index)
/// and pays the second-highest capped value.
pub fn capped_vickrey(values: &[f64], budgets: &[Budget]) -> Outcome {
    assert!(!values.is_empty(), "at least one bidder required");
    assert_eq!(values.len(), budgets.len());
    let capped: Vec<f64> = values.iter().zip(budgets).map(|(&v, b)| b.cap(v)).collect();
    let order = rank_by_value_desc(&capped);
    let winner = order[0];
    let price = if order.len() > 1 { capped[order[1]] } else { 0.0 };
    let mut allocation = vec![0.0; values.len()];
    let mut payments = vec![0.0; values.len()];
    allocation[winner] = 1.0;
    payments[winner] = price;
    Outcome::new("vickrey-capped", allocation, payments)
        .with_diagnostics(Diagnostics::Winner { winner })
}

/// Max-weight assignment of `weights.len()` agents to `item_count` items
/// (each agent exactly one item). Returns the optimal weight and the
/// lexicographically smallest optimal assignment.
fn max_assignment(weights: &[Vec<f64>], item_count: usize) -> (f64, Vec<usize>) {
    let rows = weights.len();
    assert!(item_count <= 24, "assignment DP limited to 24 items");
    let full = (1usize << item_count) - 1;
    // best[a][mask]: max weight assigning agents a.. to available items.
    let mut best = vec![vec![0.0_f64; full + 1]; rows + 1];
    for a in (0..rows).rev() {
        for mask in 0..=full {
            if (mask as u32).count_ones() < (rows - a) as u32 {
                continue;
            }
            let mut opt = f64::NEG_INFINITY;
            for j in 0..item_count {
                if mask & (1 << j) != 0 {
                    let cand = weights[a][j] + best[a + 1][mask & !(1 << j)];
                    if cand > opt {
                        opt = cand;
                    }
                }
            }
            best[a][mask] = opt;
        }
    }
    let total = best[0][full];
    let tol = 1e-12 * (1.0 + total.abs());
    let mut assignment = Vec::with_capacity(rows);
    let mut mask = full;
    for a in 0..rows {
        for j in 0..item_count {
            if mask & (1 << j) != 0
                && weights[a][j] + best[a + 1][mask & !(1 << j)] >= best[a][mask] - tol
            {
                assignment.push(j);
                mask &= !(1 << j);
                break;
            }
        }
    }
    (total, assignment)
}

/// Optimal liquid welfare of a matching market: the max-weight perfect
/// matching on capped values (0/1 allocations make the cap exact).
pub fn optimal_matching_lw(market: &MatchingMarket) -> f64 {
    let n = market.n();
    let capped: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| market.capped(i, j)).collect()).collect();
    max_assignment(&capped, n).0
}

/// VCG on capped values for a matching market. Payments are the
/// externality each agent imposes; they never exceed the matched capped
/// value and hence stay within budget.
pub fn capped_vcg_matching(market: &MatchingMarket) -> Outcome {
    let n = market.n();
    let capped: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| market.capped(i, j)).collect()).collect();
    let (total, assignment) = max_assignment(&capped, n);
    let mut payments = vec![0.0; n];
    for i in 0..n {
        let reduced: Vec<Vec<f64>> = (0..n).filter(|&a| a != i).map(|a| capped[a].clone()).collect();
        let (without_i, _) = max_assignment(&reduced, n);
        let others_now = total - capped[i][assignment[i]];
        payments[i] = (without_i - others_now).max(0.0);
    }
    let allocation = vec![1.0; n];
    Outcome::new("vcg-matching", allocation, payments)
        .with_diagnostics(Diagnostics::Matching { assignment })
}

/// Liquid welfare achieved by an assignment in a matching market.
pub fn matching_liquid_welfare(market: &MatchingMarket, assignment: &[usize]) -> f64 {
    assignment.iter().enumerate().map(|(i, &j)| market.capped(i, j)).sum()
}

/// Allocation of the two-bidder equal-budget rule (budgets normalized to
/// 1). Symmetric; written for hi ≥ lo and keyed by the *lower* value:
/// equal values split evenly; a lower value ≤ 1/3 concedes everything;
/// on [1/3, 1] the split interpolates as (1/4 + 1/(4·lo), 3/4 − 1/(4·lo));
/// above 1 the values split evenly.
pub fn two_bidder_43_allocation(v1: f64, v2: f64) -> (f64, f64) {
    if v1 == v2 {
        return (0.5, 0.5);
    }
    let (lo, flipped) = if v1 > v2 { (v2, false) } else { (v1, true) };
    let pair = if lo <= 1.0 / 3.0 {
        (1.0, 0.0)
    } else if lo <= 1.0 {
        (0.25 + 0.25 / lo, 0.75 - 0.25 / lo)
    } else {
        (0.5, 0.5)
    };
    if flipped {
        (pair.1, pair.0)
    } else {
        pair
    }
}

pub(crate) struct Rule43;

impl AllocationRule for Rule43 {
    fn allocate(&self, i: usize, own_value: f64, reports: &[f64]) -> Result<f64, MyersonError> {
        let other = reports[1 - i];
        let (x1, x2) = if i == 0 {
            two_bidder_43_allocation(own_value, other)
        } else {
            two_bidder_43_allocation(other, own_value)
        };
        Ok(if i == 0 { x1 } else { x2 })
    }

    fn hints(&self, i: usize, reports: &[f64]) -> Vec<f64> {
        vec![1.0 / 3.0, 1.0, reports[1 - i]]
    }
}

/// Two-bidder auction with common budget 1 achieving at least 3/4 of the
/// optimal liquid welfare, with payments from the standard integral.
pub fn two_bidder_43(v1: f64, v2: f64) -> Outcome {
    assert!(v1 >= 0.0 && v2 >= 0.0, "values must be non-negative");
    let reports = [v1, v2];
    let (x1, x2) = two_bidder_43_allocation(v1, v2);
    let payments: Vec<f64> = (0..2)
        .map(|i| {
            myerson_payment(&Rule43, i, &reports)
                .expect("piecewise-smooth bounded rule always integrates")
        })
        .collect();
    Outcome::new("two-bidder-43", vec![x1, x2], payments)
}

/// The same rule for a common budget `b ≠ 1`: values are measured in units
/// of the budget, and payments scale back by `b`.
pub fn two_bidder_43_with_budget(v1: f64, v2: f64, b: f64) -> Outcome {
    assert!(b > 0.0, "common budget must be positive");
    let mut outcome = two_bidder_43(v1 / b, v2 / b);
    for p in &mut outcome.payments {
        *p *= b;
    }
    outcome
}

/// Give the whole unit to a uniformly random bidder for free.
/// Deterministic for a fixed seed.
pub fn random_dump(n: usize, seed: u64) -> Outcome {
    assert!(n >= 1, "at least one bidder required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let winner = rng.gen_range(0..n);
    let mut allocation = vec![0.0; n];
    allocation[winner] = 1.0;
    Outcome::new("random-dump", allocation, vec![0.0; n])
        .with_diagnostics(Diagnostics::Winner { winner })
}
