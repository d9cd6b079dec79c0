//! Benchmark oracles for the optimal liquid welfare.
//!
//! Two routes, deliberately independent of the mechanisms they judge:
//!
//! - `optimal_lw_additive`: exact greedy for additive values — allocate
//!   in descending value order, each bidder taking `min(Bᵢ/vᵢ, what's
//!   left)`. Optimal because capping makes per-unit liquid value `vᵢ`
//!   up to quantity `Bᵢ/vᵢ` and 0 beyond.
//! - `optimal_lw_grid`: brute-force dynamic program over the grid
//!   `{0, 1/m, …, 1}`, valid for any monotone valuation; within
//!   `(max slope)/m` of the true optimum and non-decreasing in `m`.
//!
//! `x_dagger` is the constrained variant used by the posted-price
//! analysis: welfare-optimal allocation of exactly half the good with one
//! bidder excluded and an optional per-player cap.

use crate::model::{liquid_welfare, rank_by_value_desc, Instance};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle requires additive valuations")]
    NotAdditive,
    #[error("grid resolution {0} is too small for {1} bidders")]
    ResolutionTooSmall(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum OracleMethod {
    Greedy,
    GridDp,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub optimum: f64,
    pub allocation: Vec<f64>,
    pub method: OracleMethod,
}

/// Greedy optimum for additive values: descending value order (ties by
/// index), each bidder takes `min(Bᵢ/vᵢ, remaining supply)`.
pub fn optimal_lw_additive(instance: &Instance) -> Result<OracleResult, OracleError> {
    let rates = instance.additive_rates().ok_or(OracleError::NotAdditive)?;
    let mut allocation = vec![0.0; instance.n()];
    let mut remaining = 1.0_f64;
    for idx in rank_by_value_desc(&rates) {
        if remaining <= 0.0 {
            break;
        }
        let rate = rates[idx];
        if rate <= 0.0 {
            continue;
        }
        let cap = match instance.bidder(idx).budget.finite() {
            Some(b) => b / rate,
            None => f64::INFINITY,
        };
        let take = cap.min(remaining);
        allocation[idx] = take;
        remaining -= take;
    }
    let optimum = liquid_welfare(instance, &allocation).expect("greedy allocation feasible");
    Ok(OracleResult { optimum, allocation, method: OracleMethod::Greedy })
}

/// Grid dynamic program maximizing `Σ min(vᵢ(xᵢ), Bᵢ)` over allocations
/// with `xᵢ ∈ {0, 1/m, …, 1}` and `Σ xᵢ ≤ 1`.
pub fn optimal_lw_grid(instance: &Instance, resolution: usize) -> Result<OracleResult, OracleError> {
    if resolution < instance.n() {
        return Err(OracleError::ResolutionTooSmall(resolution, instance.n()));
    }
    grid_dp(instance, resolution, None, None, false)
}

/// Constrained grid optimum: bidder `excluded` gets nothing, exactly half
/// the good is allocated (`Σ xᵢ = 1/2`), and each bidder is limited to
/// `cap_per_player` when given. Falls back to `Σ xᵢ ≤ 1/2` when the
/// equality is infeasible (e.g. too few bidders under the cap), which can
/// only increase the reported optimum.
pub fn x_dagger(
    instance: &Instance,
    excluded: usize,
    cap_per_player: Option<f64>,
    resolution: usize,
) -> Result<OracleResult, OracleError> {
    if resolution < instance.n() {
        return Err(OracleError::ResolutionTooSmall(resolution, instance.n()));
    }
    // An even grid makes the half-supply target exact.
    let m = resolution + resolution % 2;
    grid_dp(instance, m, Some(excluded), cap_per_player, true)
}

/// Route to the exact oracle: greedy when every valuation is additive,
/// grid DP otherwise.
pub fn optimal_lw(instance: &Instance, resolution: usize) -> Result<OracleResult, OracleError> {
    if instance.additive_rates().is_some() {
        optimal_lw_additive(instance)
    } else {
        optimal_lw_grid(instance, resolution)
    }
}

fn grid_dp(
    instance: &Instance,
    m: usize,
    excluded: Option<usize>,
    cap_per_player: Option<f64>,
    half_supply_exactly: bool,
) -> Result<OracleResult, OracleError> {
    let n = instance.n();
    let budget_units = if half_supply_exactly { m / 2 } else { m };
    let cap_units = cap_per_player
        .map(|c| ((c * m as f64) + 1e-9).floor() as usize)
        .unwrap_or(m)
        .min(budget_units);

    // Per-bidder capped values on the grid, truncated where the curve
    // saturates (taking more units past saturation is never useful).
    let mut vals: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (i, bidder) in instance.bidders().iter().enumerate() {
        if excluded == Some(i) {
            vals.push(vec![0.0]);
            continue;
        }
        let limit = cap_units;
        let mut row = Vec::with_capacity(limit + 1);
        for t in 0..=limit {
            row.push(bidder.capped_value(t as f64 / m as f64));
        }
        if !half_supply_exactly {
            let last = *row.last().unwrap();
            if let Some(sat) = row.iter().position(|&v| v >= last) {
                row.truncate(sat + 1);
            }
        }
        vals.push(row);
    }

    // dp[u] = best welfare using exactly u grid units so far.
    let mut dp = vec![f64::NEG_INFINITY; budget_units + 1];
    dp[0] = 0.0;
    let mut choice: Vec<Vec<u32>> = Vec::with_capacity(n);
    for row in &vals {
        let t_max = row.len() - 1;
        let mut next = vec![f64::NEG_INFINITY; budget_units + 1];
        let mut pick = vec![0u32; budget_units + 1];
        for u in 0..=budget_units {
            for t in 0..=t_max.min(u) {
                let base = dp[u - t];
                if base == f64::NEG_INFINITY {
                    continue;
                }
                let cand = base + row[t];
                if cand > next[u] {
                    next[u] = cand;
                    pick[u] = t as u32;
                }
            }
        }
        dp = next;
        choice.push(pick);
    }

    let mut target = budget_units;
    if half_supply_exactly && dp[target] == f64::NEG_INFINITY {
        // Equality infeasible; relax to ≤ half supply.
        target = (0..=budget_units)
            .filter(|&u| dp[u] > f64::NEG_INFINITY)
            .max_by(|&a, &b| dp[a].partial_cmp(&dp[b]).unwrap())
            .unwrap_or(0);
    } else if !half_supply_exactly {
        target = (0..=budget_units)
            .max_by(|&a, &b| dp[a].partial_cmp(&dp[b]).unwrap())
            .unwrap();
    }

    let mut allocation = vec![0.0; n];
    let mut u = target;
    for i in (0..n).rev() {
        let t = choice[i][u] as usize;
        allocation[i] = t as f64 / m as f64;
        u -= t;
    }
    let optimum = if dp[target] == f64::NEG_INFINITY { 0.0 } else { dp[target] };
    Ok(OracleResult { optimum, allocation, method: OracleMethod::GridDp })
}
