//! Market-clearing ("uniform price") auction for one divisible unit with
//! budget-limited additive bidders, priced by the standard payment
//! integral for monotone rules.
//!
//! Sort values descending and let `k` be the largest prefix whose budget
//! sum fits under the k-th value, `Σ_{j≤k} B_(j) ≤ v_(k)`:
//!
//! - **Case I** (`Σ_{j≤k} B_(j) > v_(k+1)`): the prefix splits the unit in
//!   proportion to budgets, `x_(j) = B_(j)/Σ`, and the clearing price is
//!   the budget sum itself;
//! - **Case II** (otherwise): the prefix buys at price `v_(k+1)` and the
//!   (k+1)-th bidder absorbs the remainder `1 − Σ/v_(k+1)`.
//!
//! Conventions: `v_(n+1) := 0` (so a full prefix forces Case I), and
//! `k = 0` means the highest-value bidder takes everything. A degenerate
//! zero prefix-budget sum falls back to the `k = 0` rule.
//!
//! Payments are synthesized from the allocation curve in the bidder's own
//! value, seeded with the curve's kink locations (rival values and budget
//! prefix sums) as quadrature hints.

use crate::model::{rank_by_value_desc, Budget, Diagnostics, Instance, Outcome};
use crate::myerson::{myerson_payment, AllocationRule, MyersonError};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UniformPriceError {
    #[error("uniform price auction requires additive valuations")]
    NotAdditive,
    #[error("payment synthesis failed: {0}")]
    Payment(#[from] MyersonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClearingCase {
    I,
    II,
}

impl std::fmt::Display for ClearingCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClearingCase::I => write!(f, "I"),
            ClearingCase::II => write!(f, "II"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClearingResult {
    /// Largest prefix (in descending-value order) whose budgets fit.
    pub k: usize,
    pub case: ClearingCase,
    pub clearing_price: f64,
    pub allocation: Vec<f64>,
}

/// Clearing over raw value/budget slices; the allocation-rule form used
/// by payment synthesis and the monotonicity audits.
fn clearing_raw(values: &[f64], budgets: &[Budget]) -> ClearingResult {
    let n = values.len();
    let order = rank_by_value_desc(values);
    let mut allocation = vec![0.0; n];

    // Largest k with Σ_{j≤k} B_(j) ≤ v_(k); the sum grows and v_(k)
    // shrinks, so the first violation is final.
    let mut k = 0usize;
    let mut prefix_at_k = 0.0;
    let mut prefix = 0.0;
    for (pos, &idx) in order.iter().enumerate() {
        let Some(b) = budgets[idx].finite() else { break };
        prefix += b;
        if prefix <= values[idx] {
            k = pos + 1;
            prefix_at_k = prefix;
        } else {
            break;
        }
    }

    if k == 0 || prefix_at_k <= 0.0 {
        // Top-value bidder takes everything (empty or moneyless prefix).
        let top = order[0];
        allocation[top] = 1.0;
        return ClearingResult {
            k: 0,
            case: ClearingCase::II,
            clearing_price: values[top],
            allocation,
        };
    }

    let v_next = if k < n { values[order[k]] } else { 0.0 };
    if prefix_at_k > v_next {
        for &idx in order.iter().take(k) {
            allocation[idx] = budgets[idx].finite().unwrap() / prefix_at_k;
        }
        ClearingResult { k, case: ClearingCase::I, clearing_price: prefix_at_k, allocation }
    } else {
        for &idx in order.iter().take(k) {
            allocation[idx] = budgets[idx].finite().unwrap() / v_next;
        }
        allocation[order[k]] = (1.0 - prefix_at_k / v_next).max(0.0);
        ClearingResult { k, case: ClearingCase::II, clearing_price: v_next, allocation }
    }
}

/// Market-clearing allocation for an additive instance.
pub fn uniform_price_allocation(instance: &Instance) -> Result<ClearingResult, UniformPriceError> {
    let values = instance.additive_rates().ok_or(UniformPriceError::NotAdditive)?;
    Ok(clearing_raw(&values, &instance.budgets()))
}

/// The clearing allocation viewed as a single-bidder allocation rule in
/// the reported value, with budgets held fixed.
pub struct UniformPriceRule {
    pub budgets: Vec<Budget>,
}

impl AllocationRule for UniformPriceRule {
    fn allocate(&self, i: usize, own_value: f64, reports: &[f64]) -> Result<f64, MyersonError> {
        let mut values = reports.to_vec();
        values[i] = own_value;
        Ok(clearing_raw(&values, &self.budgets).allocation[i])
    }

    fn hints(&self, i: usize, reports: &[f64]) -> Vec<f64> {
        // Kinks in u sit at rival values and at budget prefix sums (with
        // and without the own budget), where k or the case can flip.
        let mut rivals: Vec<(f64, Budget)> = (0..reports.len())
            .filter(|&j| j != i)
            .map(|j| (reports[j], self.budgets[j]))
            .collect();
        rivals.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut hints: Vec<f64> = rivals.iter().map(|r| r.0).collect();
        let own = self.budgets[i].finite();
        if let Some(ob) = own {
            hints.push(ob);
        }
        let mut prefix = 0.0;
        for (_, b) in &rivals {
            let Some(fb) = b.finite() else { break };
            prefix += fb;
            hints.push(prefix);
            if let Some(ob) = own {
                hints.push(prefix + ob);
            }
        }
        hints
    }
}

/// Full auction: clearing allocation plus payments from the standard
/// integral of the per-bidder allocation curve.
pub fn uniform_price_auction(instance: &Instance) -> Result<Outcome, UniformPriceError> {
    let values = instance.additive_rates().ok_or(UniformPriceError::NotAdditive)?;
    let clearing = clearing_raw(&values, &instance.budgets());
    let rule = UniformPriceRule { budgets: instance.budgets() };
    let mut payments = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        payments.push(myerson_payment(&rule, i, &values)?);
    }
    Ok(Outcome::new("uniform-price", clearing.allocation.clone(), payments).with_diagnostics(
        Diagnostics::Clearing {
            k: clearing.k,
            case: clearing.case.to_string(),
            price: clearing.clearing_price,
        },
    ))
}
