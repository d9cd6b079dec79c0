//! Ascending-clock ("clinching") auction for one divisible unit with
//! budget-limited bidders and additive values.
//!
//! As the price clock `p` rises, bidder `i` clinches quantity whenever the
//! rivals' remaining money can no longer absorb the remnant supply `S`:
//!
//! - active set `A(p) = {i : p < vᵢ}`;
//! - `i` is *clinching* when `S(p) = Σ_{j∈A∖i} (Bⱼ − πⱼ)/p`, and then

//!   accrues `dxᵢ = S/p · dp` while paying `dπᵢ = S · dp`;
//! - when the clock reaches a value `vᵢ`, that bidder leaves `A` and the
//!   survivors instantly clinch the demand released by the exit.
//!
//! Between events the membership equality is preserved by the dynamics,
//! so the run decomposes into phases with a fixed clinching set `C`. With
//! `c = |C|` and phase start `(p_e, S_e)` the closed forms are
//!
//! ```text
//! S(p)  = S_e · (p_e/p)^c
//! Δπ    = ∫ S dp   = S_e·p_e·ln(p/p_e)            (c = 1)
//!                  = S_e·p_e^c·(p^{1−c} − p_e^{1−c})/(1−c)   (c ≠ 1)
//! Δx    = ∫ S/p dp = (S_e/c)·(1 − (p_e/p)^c)      (per member)
//! ```
//!
//! and the integrator advances from event to event: value exits, clinching
//! entries (located by bisection on the closed forms), and members running
//! out of money. Instantaneous clinches — value-exit jumps, the degenerate
//! price-zero start, and demand collapses after a member goes broke — all
//! apply the same fixpoint rule: `i` takes
//! `min(own demand, [S − Σ_{j∈A∖i} demandⱼ]⁺)` at the current price.
//!
//! An independent ε-step clock simulation is provided as a convergence
//! oracle for tests; it shares no code with the event integrator.

use crate::model::{
    Budget, Diagnostics, Instance, Outcome, TOL_BISECT, TOL_SOLVER,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClinchError {
    #[error("clinching auction requires additive valuations")]
    NotAdditive,
    #[error("event bisection stalled: {0}")]
    NumericalStall(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EventKind {
    /// A bidder joined the clinching set (continuous phase boundary).
    EnterClinch,
    /// An instantaneous clinch: value exit, broke-member collapse, or the
    /// degenerate price-zero start.
    ValueJump,
    /// Supply hit zero.
    Exhaust,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BidderDelta {
    pub bidder: usize,
    pub quantity: f64,
    pub payment: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClinchEvent {
    pub price: f64,
    pub kind: EventKind,
    pub deltas: Vec<BidderDelta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClinchingTrace {
    pub events: Vec<ClinchEvent>,
    /// Price interval `[p₀, p_f]` over which allocation happened; `None`
    /// when nothing was ever allocated (all values or budgets zero).
    pub interval: Option<(f64, f64)>,
}

/// Certify the revenue accounting behind the half-optimum bound.
///
/// The bound's argument charges, for every bidder whose value lies inside
/// the clinching interval, the bidder's budget not yet spent when it
/// exits (collected by the rivals clinching what the exit releases), and
/// charges every bidder valued above the final price its full budget.
/// Those charges hold when demand saturates the remnant supply through
/// the whole interval, but an exit can also land in a gap — the interval
/// opening, or a lull after a clinching bidder went broke — where the
/// clinch is capped by the remnant supply and collects less than the
/// leaving bidder's money. This walks the trace and returns `true` only
/// when every charge was actually collected, i.e. when the bound is in
/// force for this run. Any unbounded budget voids the accounting (such a
/// bidder's money can never be collected in full), as does a non-additive
/// instance.
pub fn revenue_charges_collected(
    instance: &Instance,
    outcome: &Outcome,
    trace: &ClinchingTrace,
) -> bool {
    let Some(values) = instance.additive_rates() else {
        return false;
    };
    let Some((p_start, p_final)) = trace.interval else {
        return false;
    };
    let mut budgets = Vec::with_capacity(values.len());
    for bidder in instance.bidders() {
        match bidder.budget {
            Budget::Finite(b) => budgets.push(b),
            Budget::Infinite => return false,
        }
    }

    for (i, (&v, &b)) in values.iter().zip(&budgets).enumerate() {
        let paid = outcome.payments[i];
        if v > p_final {
            // Charged in full: bidders still demanding when the good ran
            // out must have spent everything.
            if b - paid > TOL_SOLVER * (1.0 + b) {
                return false;
            }
        } else if v >= p_start {
            // Charged its unspent money at its own exit: the jump there
            // must have collected at least that much from the clinchers.
            let released = b - paid;
            let collected: f64 = trace
                .events
                .iter()
                .filter(|e| e.price == v && e.kind == EventKind::ValueJump)
                .flat_map(|e| &e.deltas)
                .map(|d| d.payment)
                .sum();
            if released - collected > TOL_SOLVER * (1.0 + released) {
                return false;
            }
        }
    }
    true
}

/// Supply below this is treated as exhausted.
const SUPPLY_EPS: f64 = 1e-12;
/// Minimum instantaneous clinch worth applying; smaller excesses are
/// integration residue.
const LUMP_TOL: f64 = 1e-10;

/// Run the auction. Returns the final outcome and the full event trace.
pub fn clinching_auction(instance: &Instance) -> Result<(Outcome, ClinchingTrace), ClinchError> {
    let values = instance.additive_rates().ok_or(ClinchError::NotAdditive)?;
    let mut run = Runner::new(instance, values);
    run.drive()?;
    let interval = run.interval();
    let trace = ClinchingTrace { events: run.events, interval };
    let outcome = Outcome::new("clinching", run.x, run.paid)
        .with_diagnostics(Diagnostics::Clinching { interval: interval.unwrap_or((0.0, 0.0)) });
    Ok((outcome, trace))
}

struct Runner<'a> {
    instance: &'a Instance,
    values: Vec<f64>,
    x: Vec<f64>,
    paid: Vec<f64>,
    active: Vec<bool>,
    member: Vec<bool>,
    p: f64,
    supply: f64,
    events: Vec<ClinchEvent>,
}

impl<'a> Runner<'a> {
    fn new(instance: &'a Instance, values: Vec<f64>) -> Runner<'a> {
        let n = instance.n();
        // Bidders with zero value are never active.
        let active = values.iter().map(|&v| v > 0.0).collect();
        Runner {
            instance,
            values,
            x: vec![0.0; n],
            paid: vec![0.0; n],
            active,
            member: vec![false; n],
            p: 0.0,
            supply: 1.0,
            events: Vec::new(),
        }
    }

    fn remaining(&self, i: usize) -> Budget {
        self.instance.bidder(i).budget.minus(self.paid[i])
    }

    fn demand(&self, i: usize, p: f64) -> f64 {
        self.remaining(i).demand_at(p)
    }

    fn rival_demand(&self, i: usize, p: f64) -> f64 {
        (0..self.values.len())
            .filter(|&j| j != i && self.active[j])
            .map(|j| self.demand(j, p))
            .sum()
    }

    /// Remaining money of every active rival, `None` when some rival's
    /// budget is infinite (the clinching equality is then unreachable).
    fn rival_money(&self, i: usize) -> Option<f64> {
        let mut total = 0.0;
        for j in 0..self.values.len() {
            if j == i || !self.active[j] {
                continue;
            }
            total += self.remaining(j).finite()?;
        }
        Some(total)
    }

    /// Active bidders ordered by descending effective value.
    fn active_by_value_desc(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.values.len()).filter(|&i| self.active[i]).collect();
        ids.sort_by(|&a, &b| self.values[b].partial_cmp(&self.values[a]).unwrap().then(a.cmp(&b)));
        ids
    }

    /// Next value exit: the active bidder with the lowest effective value
    /// (ties exit in descending index order, matching the infinitesimal
    /// perturbation vᵢ − i·η).
    fn next_exit(&self) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.values.len() {
            if !self.active[i] {
                continue;
            }
            let better = match best {
                None => true,
                Some((bv, bi)) => self.values[i] < bv || (self.values[i] == bv && i > bi),
            };
            if better {
                best = Some((self.values[i], i));
            }
        }
        best
    }

    fn pay(&mut self, i: usize, amount: f64) {
        self.paid[i] += amount;
        // Snap to the budget when roundoff lands within solver tolerance;
        // exact exhaustion matters for the structural checks.
        if let Budget::Finite(b) = self.instance.bidder(i).budget {
            if self.paid[i] > b || (b - self.paid[i]).abs() <= TOL_SOLVER * (1.0 + b) {
                self.paid[i] = b;
            }
        }
    }

    /// Apply instantaneous clinches at price `p` to fixpoint; one trace
    /// event is recorded when anything moved.
    fn resolve_jumps(&mut self, p: f64) {
        let mut deltas: Vec<BidderDelta> = Vec::new();
        loop {
            let mut applied = false;
            for i in self.active_by_value_desc() {
                if self.supply <= SUPPLY_EPS {
                    break;
                }
                let excess = self.supply - self.rival_demand(i, p);
                if excess > LUMP_TOL {
                    let take = excess.min(self.demand(i, p)).min(self.supply);
                    if take > LUMP_TOL {
                        self.x[i] += take;
                        self.supply -= take;
                        let cost = p * take;
                        self.pay(i, cost);
                        match deltas.iter_mut().find(|d| d.bidder == i) {
                            Some(d) => {
                                d.quantity += take;
                                d.payment += cost;
                            }
                            None => deltas.push(BidderDelta { bidder: i, quantity: take, payment: cost }),
                        }
                        applied = true;
                    }
                }
            }
            if !applied {
                break;
            }
        }
        if !deltas.is_empty() {
            self.events.push(ClinchEvent { price: p, kind: EventKind::ValueJump, deltas });
        }
    }

    /// Entry residual h_i(p) = Σ_{j∈A∖i} Rⱼ(p) − S(p)·p for a candidate at
    /// phase start `(p_e, S_e)` with `c` clinching members. Strictly
    /// decreasing in `p` (h′ = −S), so a sign change brackets the entry.
    fn entry_residual(rival_money_now: f64, c: usize, p_e: f64, s_e: f64, p: f64) -> f64 {
        rival_money_now - c as f64 * phase_payment(c, p_e, s_e, p) - phase_supply(c, p_e, s_e, p) * p
    }

    /// Candidates able to join the clinching set: active non-members with
    /// money whose rivals all have finite budgets.
    fn entry_candidates(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.values.len() {
            if !self.active[i] || self.member[i] {
                continue;
            }
            match self.remaining(i) {
                Budget::Finite(r) if r <= 0.0 => continue,
                _ => {}
            }
            if let Some(money) = self.rival_money(i) {
                out.push((i, money));
            }
        }
        out
    }

    fn entry_eps(&self, p: f64) -> f64 {
        1e-9 * (1.0 + p)
    }

    /// Mark every candidate whose residual is already ≤ eps at price `p`
    /// as clinching. Returns true when someone entered.
    fn absorb_immediate_entries(&mut self, p: f64) -> bool {
        let eps = self.entry_eps(p);
        let mut entered = false;
        for (i, money) in self.entry_candidates() {
            if money - self.supply * p <= eps {
                self.member[i] = true;
                entered = true;
            }
        }
        if entered {
            self.events.push(ClinchEvent { price: p, kind: EventKind::EnterClinch, deltas: vec![] });
        }
        entered
    }

    /// Earliest entry event strictly inside `(p, target)`, located by
    /// bisection on the closed-form residual of the lowest-money candidate.
    fn entry_before(&self, target: f64) -> Result<Option<f64>, ClinchError> {
        let candidates = self.entry_candidates();
        let Some(&(_, min_money)) = candidates
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        else {
            return Ok(None);
        };
        let c = self.member.iter().filter(|&&m| m).count();
        let (p_e, s_e) = (self.p, self.supply);
        let h_end = Self::entry_residual(min_money, c, p_e.max(TOL_BISECT), s_e, target);
        if h_end > 0.0 {
            return Ok(None);
        }
        let mut lo = p_e.max(TOL_BISECT);
        let mut hi = target;
        if Self::entry_residual(min_money, c, lo, s_e, lo) < -self.entry_eps(lo) {
            return Err(ClinchError::NumericalStall(format!(
                "entry residual negative at phase start p={lo}"
            )));
        }
        for _ in 0..200 {
            if hi - lo <= TOL_BISECT * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if Self::entry_residual(min_money, c, p_e.max(TOL_BISECT), s_e, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(hi))
    }

    /// Earliest price in `(p, target)` at which a clinching member's
    /// money runs out: solves Δπ(p) = remaining.
    fn broke_before(&self, target: f64) -> Option<f64> {
        let c = self.member.iter().filter(|&&m| m).count();
        if c == 0 {
            return None;
        }
        let (p_e, s_e) = (self.p, self.supply);
        let mut best: Option<f64> = None;
        for j in 0..self.values.len() {
            if !self.member[j] {
                continue;
            }
            let Some(r) = self.remaining(j).finite() else { continue };
            if phase_payment(c, p_e, s_e, target) <= r {
                continue;
            }
            // Bisect Δπ(p) = r on (p_e, target]; Δπ is increasing.
            let (mut lo, mut hi) = (p_e, target);
            for _ in 0..200 {
                if hi - lo <= TOL_BISECT * hi.max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if phase_payment(c, p_e, s_e, mid) < r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if best.is_none_or(|b| hi < b) {
                best = Some(hi);
            }
        }
        best
    }

    /// Advance the clock to `p_new`, applying the closed-form phase
    /// dynamics to every clinching member.
    fn integrate_to(&mut self, p_new: f64) {
        let c = self.member.iter().filter(|&&m| m).count();
        if p_new <= self.p {
            return;
        }
        if c > 0 {
            let (p_e, s_e) = (self.p, self.supply);
            let dpay = phase_payment(c, p_e, s_e, p_new);
            let dx = phase_quantity(c, p_e, s_e, p_new);
            for j in 0..self.values.len() {
                if self.member[j] {
                    self.x[j] += dx;
                    self.pay(j, dpay);
                }
            }
            self.supply = phase_supply(c, p_e, s_e, p_new);
        }
        self.p = p_new;
    }

    fn drive(&mut self) -> Result<(), ClinchError> {
        // Degenerate price-zero clinches (no competition / no rival money).
        self.resolve_jumps(0.0);
        loop {
            if self.supply <= SUPPLY_EPS {
                self.supply = 0.0;
                self.events.push(ClinchEvent { price: self.p, kind: EventKind::Exhaust, deltas: vec![] });
                break;
            }
            let Some((v_exit, exit_idx)) = self.next_exit() else {
                break;
            };
            // A member whose budget was consumed exactly by a lump stops
            // clinching (its demand is identically zero from here on).
            for j in 0..self.values.len() {
                if self.member[j] && self.remaining(j).finite().is_some_and(|r| r <= 0.0) {
                    self.member[j] = false;
                }
            }
            if self.p > 0.0 && self.absorb_immediate_entries(self.p) {
                continue;
            }
            let entry = self.entry_before(v_exit)?;
            let broke = self.broke_before(v_exit);
            // Earliest event wins; exits win exact ties so the jump rule
            // applies after the continuous phase reaches the value.
            let exit_guard = v_exit - TOL_BISECT * v_exit.max(1.0);
            match (entry, broke) {
                (Some(pe), _) if pe < exit_guard && broke.is_none_or(|pb| pe <= pb) => {
                    self.integrate_to(pe);
                    // Entry markers are recorded by the immediate-entry
                    // sweep on the next loop turn.
                    if !self.absorb_immediate_entries(pe) {
                        return Err(ClinchError::NumericalStall(format!(
                            "no candidate entered at bisected price {pe}"
                        )));
                    }
                }
                (_, Some(pb)) if pb < exit_guard => {
                    self.integrate_to(pb);
                    // The broke member stops clinching; released demand is
                    // absorbed instantly by the survivors.
                    for j in 0..self.values.len() {
                        if self.member[j] && self.remaining(j).finite().is_some_and(|r| r <= TOL_SOLVER) {
                            self.member[j] = false;
                        }
                    }
                    self.resolve_jumps(pb);
                }
                _ => {
                    self.integrate_to(v_exit);
                    self.active[exit_idx] = false;
                    self.member[exit_idx] = false;
                    self.resolve_jumps(v_exit);
                }
            }
        }
        Ok(())
    }

    fn interval(&self) -> Option<(f64, f64)> {
        let alloc_prices: Vec<f64> = self
            .events
            .iter()
            .filter(|e| e.kind == EventKind::EnterClinch || !e.deltas.is_empty())
            .map(|e| e.price)
            .collect();
        let first = *alloc_prices.first()?;
        let last = self
            .events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::Exhaust || !e.deltas.is_empty())
            .map(|e| e.price)
            .unwrap_or(*alloc_prices.last().unwrap());
        Some((first, last.max(first)))
    }
}

/// Remnant supply after the phase runs from `(p_e, s_e)` to `p` with `c`
/// clinching members.
fn phase_supply(c: usize, p_e: f64, s_e: f64, p: f64) -> f64 {
    if c == 0 {
        return s_e;
    }
    s_e * (p_e / p).powi(c as i32)
}

/// Per-member payment over the phase: ∫ S dp.
fn phase_payment(c: usize, p_e: f64, s_e: f64, p: f64) -> f64 {
    match c {
        0 => 0.0,
        1 => s_e * p_e * (p / p_e).ln(),
        _ => {
            let cf = c as f64;
            s_e * p_e.powi(c as i32) * (p.powf(1.0 - cf) - p_e.powf(1.0 - cf)) / (1.0 - cf)
        }
    }
}

/// Per-member quantity over the phase: ∫ S/p dp.
fn phase_quantity(c: usize, p_e: f64, s_e: f64, p: f64) -> f64 {
    if c == 0 {
        return 0.0;
    }
    let cf = c as f64;
    (s_e / cf) * (1.0 - (p_e / p).powi(c as i32))
}

/// Discrete ascending-clock simulation with step `epsilon`; used only as
/// a convergence oracle for the event-driven integrator. At each tick,
/// every active bidder clinches `[S − Σ_{j∈A∖i} Rⱼ/p]⁺` capped by their
/// own remaining demand, iterated to fixpoint before the clock advances.
pub fn clinching_epsilon_oracle(instance: &Instance, epsilon: f64) -> Result<Outcome, ClinchError> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let values = instance.additive_rates().ok_or(ClinchError::NotAdditive)?;
    let n = instance.n();
    let mut x = vec![0.0; n];
    let mut paid = vec![0.0; n];
    let mut supply = 1.0_f64;
    let v_max = values.iter().cloned().fold(0.0, f64::max);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));

    let mut tick = 1u64;
    loop {
        let p = epsilon * tick as f64;
        if p > v_max + epsilon || supply <= SUPPLY_EPS {
            break;
        }
        loop {
            let mut applied = false;
            for &i in &order {
                if values[i] <= p || supply <= SUPPLY_EPS {
                    continue;
                }
                let rivals: f64 = (0..n)
                    .filter(|&j| j != i && values[j] > p)
                    .map(|j| instance.bidder(j).budget.minus(paid[j]).demand_at(p))
                    .sum();
                let excess = supply - rivals;
                if excess > 1e-15 {
                    let own = instance.bidder(i).budget.minus(paid[i]).demand_at(p);
                    let take = excess.min(own).min(supply);
                    if take > 1e-15 {
                        x[i] += take;
                        paid[i] += p * take;
                        supply -= take;
                        applied = true;
                    }
                }
            }
            if !applied {
                break;
            }
        }
        tick += 1;
    }
    Ok(Outcome::new("clinching-epsilon-oracle", x, paid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::liquid_welfare;

    fn b(v: f64) -> Budget {
        Budget::Finite(v)
    }

    fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (k, (a, e)) in actual.iter().zip(expected).enumerate() {
            assert!((a - e).abs() < tol, "index {k}: {a} vs {e}");
        }
    }

    #[test]
    fn two_symmetric_budgets_split_by_closed_form() {
        let inst = Instance::additive(&[2.0, 3.0], &[b(1.0), b(1.0)]);
        let (outcome, trace) = clinching_auction(&inst).unwrap();
        assert_close(&outcome.allocation, &[3.0 / 8.0, 5.0 / 8.0], 1e-7);
        assert_close(&outcome.payments, &[0.5, 1.0], 1e-7);
        let (p0, pf) = trace.interval.unwrap();
        assert!((p0 - 1.0).abs() < 1e-7, "p0 {p0}");
        assert!((pf - 2.0).abs() < 1e-7, "pf {pf}");
        let mut last = f64::NEG_INFINITY;
        for e in &trace.events {
            assert!(e.price >= last);
            last = e.price;
        }
    }

    #[test]
    fn rich_high_value_bidder_takes_everything_at_the_exit_price() {
        let inst = Instance::additive(&[3.0, 1.0], &[b(2.0), b(5.0)]);
        let (outcome, trace) = clinching_auction(&inst).unwrap();
        assert_close(&outcome.allocation, &[1.0, 0.0], 1e-9);
        assert_close(&outcome.payments, &[1.0, 0.0], 1e-9);
        let (p0, pf) = trace.interval.unwrap();
        assert!((p0 - 1.0).abs() < 1e-9 && (pf - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infinite_budget_rival_forces_full_sale_to_the_capped_bidder() {
        let inst = Instance::additive(&[1.0, 10.0], &[Budget::Infinite, b(1.0)]);
        let (outcome, _) = clinching_auction(&inst).unwrap();
        assert_close(&outcome.allocation, &[0.0, 1.0], 1e-9);
        assert_close(&outcome.payments, &[0.0, 1.0], 1e-9);
    }

    #[test]
    fn single_bidder_clinches_everything_for_free() {
        let inst = Instance::additive(&[5.0], &[b(1.0)]);
        let (outcome, trace) = clinching_auction(&inst).unwrap();
        assert_eq!(outcome.allocation, vec![1.0]);
        assert_eq!(outcome.payments, vec![0.0]);
        assert_eq!(trace.interval, Some((0.0, 0.0)));
    }

    #[test]
    fn two_infinite_budgets_reduce_to_second_price() {
        let inst = Instance::additive(&[3.0, 7.0], &[Budget::Infinite, Budget::Infinite]);
        let (outcome, _) = clinching_auction(&inst).unwrap();
        assert_close(&outcome.allocation, &[0.0, 1.0], 1e-9);
        assert_close(&outcome.payments, &[0.0, 3.0], 1e-9);
    }

    #[test]
    fn declining_member_money_pulls_the_rival_into_the_clinching_set() {
        // Bidder 1 clinches alone from p = 0.05; its money decline drags
        // bidder 0 in at p = 0.05·e, after which both clinch symmetrically
        // until the tied exit at 10 releases the remnant to bidder 0.
        let inst = Instance::additive(&[10.0, 10.0], &[b(0.05), b(0.1)]);
        let (outcome, trace) = clinching_auction(&inst).unwrap();
        let e = std::f64::consts::E;
        let x0 = 1.0 / (2.0 * e) + e / 80000.0;
        assert_close(&outcome.allocation, &[x0, 1.0 - x0], 1e-7);
        assert_close(&outcome.payments, &[0.05, 0.1 - e / 4000.0], 1e-7);
        let enters: Vec<f64> = trace
            .events
            .iter()
            .filter(|ev| ev.kind == EventKind::EnterClinch)
            .map(|ev| ev.price)
            .collect();
        assert_eq!(enters.len(), 2);
        assert!((enters[0] - 0.05).abs() < 1e-9);
        assert!((enters[1] - 0.05 * e).abs() < 1e-7);
    }

    #[test]
    fn tied_values_exit_in_descending_index_order() {
        // v equal: the higher index exits first and the lower index takes
        // the released remnant, paying its full budget.
        let inst = Instance::additive(&[10.0, 10.0], &[b(0.1), b(1.0)]);
        let (outcome, _) = clinching_auction(&inst).unwrap();
        assert_close(&outcome.allocation, &[0.01, 0.99], 1e-7);
        assert_close(&outcome.payments, &[0.1, 0.1 * (100.0_f64).ln()], 1e-7);
    }

    #[test]
    fn zero_value_bidders_are_dropped() {
        let inst = Instance::additive(&[0.0, 2.0], &[b(5.0), b(1.0)]);
        let (outcome, _) = clinching_auction(&inst).unwrap();
        assert_close(&outcome.allocation, &[0.0, 1.0], 1e-9);
        assert!(outcome.payments[0] == 0.0);
    }

    #[test]
    fn zero_budgets_allocate_nothing() {
        let inst = Instance::additive(&[2.0, 3.0], &[b(0.0), b(0.0)]);
        let (outcome, trace) = clinching_auction(&inst).unwrap();
        assert_eq!(outcome.allocation, vec![0.0, 0.0]);
        assert_eq!(trace.interval, None);
    }

    #[test]
    fn epsilon_oracle_converges_to_the_event_integrator() {
        for (values, budgets) in [
            (vec![2.0, 3.0], vec![b(1.0), b(1.0)]),
            (vec![3.0, 1.0], vec![b(2.0), b(5.0)]),
            (vec![10.0, 10.0], vec![b(0.05), b(0.1)]),
            (vec![1.0, 10.0], vec![Budget::Infinite, b(1.0)]),
        ] {
            let inst = Instance::additive(&values, &budgets);
            let (outcome, _) = clinching_auction(&inst).unwrap();
            let sim = clinching_epsilon_oracle(&inst, 1e-4).unwrap();
            for i in 0..values.len() {
                assert!(
                    (outcome.allocation[i] - sim.allocation[i]).abs() < 1e-3,
                    "allocation {i}: {} vs {}",
                    outcome.allocation[i],
                    sim.allocation[i]
                );
                assert!(
                    (outcome.payments[i] - sim.payments[i]).abs() < 1e-3,
                    "payment {i}: {} vs {}",
                    outcome.payments[i],
                    sim.payments[i]
                );
            }
        }
    }

    #[test]
    fn epsilon_oracle_single_bidder_pays_nothing_in_the_limit() {
        let inst = Instance::additive(&[5.0], &[b(1.0)]);
        let sim = clinching_epsilon_oracle(&inst, 1e-4).unwrap();
        assert!((sim.allocation[0] - 1.0).abs() < 1e-9);
        assert!(sim.payments[0] < 1e-3);
    }

    #[test]
    fn full_allocation_and_feasibility_on_seeded_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..500 {
            let n = rng.gen_range(2..=8);
            let values: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
            let budgets: Vec<Budget> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        Budget::Infinite
                    } else {
                        Budget::Finite(10f64.powf(rng.gen_range(-1.0..1.0)))
                    }
                })
                .collect();
            let inst = Instance::additive(&values, &budgets);
            let (outcome, trace) = clinching_auction(&inst).unwrap();
            let total: f64 = outcome.allocation.iter().sum();
            assert!(total <= 1.0 + TOL_SOLVER, "overallocated on trial {trial}");
            assert!(
                (total - 1.0).abs() < 1e-7,
                "supply not exhausted on trial {trial}: {total}"
            );
            for (i, budget) in budgets.iter().enumerate() {
                assert!(outcome.allocation[i] >= -1e-12);
                assert!(
                    budget.allows(outcome.payments[i], 1e-9),
                    "budget violated on trial {trial}"
                );
                assert!(outcome.payments[i] >= -1e-12);
            }
            // Liquid welfare of the outcome is well-defined (feasible).
            liquid_welfare(&inst, &outcome.allocation).unwrap();
            if let Some((p0, pf)) = trace.interval {
                assert!(p0 <= pf + 1e-12);
            }
        }
    }
}
