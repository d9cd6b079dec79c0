//! Payment synthesis for monotone allocation rules.
//!
//! A single-parameter rule that awards quantity `xᵢ(u, v₋ᵢ)` monotone in
//! the bidder's own report `u` is made truthful by the integral payment
//!
//! ```text
//! πᵢ(v) = vᵢ·xᵢ(v) − ∫₀^{vᵢ} xᵢ(u, v₋ᵢ) du
//! ```
//!
//! The rules in this crate are piecewise rational with known breakpoint
//! families, so the integrator splits at every hint point and every other
//! bidder's report, then refines adaptively; step discontinuities are
//! localized by bisection down to width [`TOL_BISECT`]. Absolute error is
//! well below the 1e-9 contract.

use crate::model::TOL_BISECT;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MyersonError {
    #[error("allocation rule failed: {0}")]
    RuleEvaluationFailed(String),
    #[error("quadrature exceeded its evaluation budget")]
    NonConvergentQuadrature,
}

/// A monotone-in-own-report allocation rule. `reports[i]` is ignored and
/// replaced by the probe value `u`; monotonicity is audited, not assumed.
///
/// Implementations must be pure so curves can be swept concurrently.
pub trait AllocationRule {
    fn allocate(&self, i: usize, u: f64, reports: &[f64]) -> Result<f64, MyersonError>;

    /// Candidate kink/jump points of `u ↦ allocate(i, u, ·)`; quadrature
    /// splits at these (plus all other bidders' reports) before refining.
    fn hints(&self, _i: usize, _reports: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// Integral payment for bidder `i` at the report vector `v`.
pub fn myerson_payment(
    rule: &dyn AllocationRule,
    i: usize,
    reports: &[f64],
) -> Result<f64, MyersonError> {
    Ok(myerson_payment_curve(rule, i, reports, &[reports[i]])?[0])
}

/// Payments for several alternative reports of bidder `i` in one
/// cumulative integration pass. `report_points` must be sorted ascending;
/// the result has one payment per point, each computed as if that point
/// were the bidder's report (others fixed).
pub fn myerson_payment_curve(
    rule: &dyn AllocationRule,
    i: usize,
    reports: &[f64],
    report_points: &[f64],
) -> Result<Vec<f64>, MyersonError> {
    if report_points.is_empty() {
        return Ok(Vec::new());
    }
    debug_assert!(
        report_points.windows(2).all(|w| w[0] <= w[1]),
        "report points must be sorted"
    );
    let top = *report_points.last().unwrap();
    if top <= 0.0 {
        // Reports at or below zero: the integral is empty and v·x(v) = 0.
        return Ok(vec![0.0; report_points.len()]);
    }

    // Split points: every probe report, every hint, every rival report.
    let mut splits: Vec<f64> = Vec::new();
    splits.extend(report_points.iter().copied());
    splits.extend(rule.hints(i, reports));
    for (j, &r) in reports.iter().enumerate() {
        if j != i {
            splits.push(r);
        }
    }
    splits.retain(|&s| s > 0.0 && s < top);
    splits.push(top);
    splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
    splits.dedup_by(|a, b| (*a - *b).abs() <= TOL_BISECT * top.max(1.0));

    let mut ctx = Quad { evals: 0, budget: 400_000 };
    let f = |u: f64| rule.allocate(i, u, reports);

    let mut payments = Vec::with_capacity(report_points.len());
    let mut next_point = 0;
    // Reports at or below zero receive nothing and pay nothing.
    while next_point < report_points.len() && report_points[next_point] <= 0.0 {
        payments.push(0.0);
        next_point += 1;
    }
    let mut cumulative = 0.0;
    let mut lo = 0.0;
    for &hi in &splits {
        cumulative += ctx.integrate(&f, lo, hi)?;
        lo = hi;
        while next_point < report_points.len() {
            let p = report_points[next_point];
            if p > hi + TOL_BISECT * top.max(1.0) {
                break;
            }
            // Integral up to p equals the cumulative at this split (p is
            // itself a split point, possibly merged into hi by dedup).
            let x_at = f(p)?;
            payments.push((p * x_at - cumulative).max(0.0));
            next_point += 1;
        }
    }
    Ok(payments)
}

/// Pointwise sweep of the allocation curve `u ↦ xᵢ(u, others)` over a
/// sorted grid; exact at the grid points.
pub fn allocation_curve(
    rule: &dyn AllocationRule,
    i: usize,
    reports: &[f64],
    grid: &[f64],
) -> Result<Vec<(f64, f64)>, MyersonError> {
    grid.iter().map(|&u| Ok((u, rule.allocate(i, u, reports)?))).collect()
}

struct Quad {
    evals: usize,
    budget: usize,
}

impl Quad {
    fn eval(
        &mut self,
        f: &dyn Fn(f64) -> Result<f64, MyersonError>,
        u: f64,
    ) -> Result<f64, MyersonError> {
        self.evals += 1;
        if self.evals > self.budget {
            return Err(MyersonError::NonConvergentQuadrature);
        }
        f(u)
    }

    fn integrate(
        &mut self,
        f: &dyn Fn(f64) -> Result<f64, MyersonError>,
        a: f64,
        b: f64,
    ) -> Result<f64, MyersonError> {
        if b - a <= 0.0 {
            return Ok(0.0);
        }
        let fa = self.eval(f, a)?;
        let m = 0.5 * (a + b);
        let fm = self.eval(f, m)?;
        let fb = self.eval(f, b)?;
        let whole = simpson(a, b, fa, fm, fb);
        self.refine(f, a, b, fa, fm, fb, whole, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        f: &dyn Fn(f64) -> Result<f64, MyersonError>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        depth: u32,
    ) -> Result<f64, MyersonError> {
        let w = b - a;
        let m = 0.5 * (a + b);
        // Discontinuities are accepted once localized to the bisection
        // width; the residual error is at most one jump times the width.
        if w <= TOL_BISECT || depth >= 64 {
            return Ok(whole);
        }
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(f, lm)?;
        let frm = self.eval(f, rm)?;
        let left = simpson(a, m, fa, flm, fm);
        let right = simpson(m, b, fm, frm, fb);
        let refined = left + right;
        if (refined - whole).abs() <= TOL_BISECT * w {
            // Richardson extrapolation on the accepted panel pair.
            return Ok(refined + (refined - whole) / 15.0);
        }
        Ok(self.refine(f, a, m, fa, flm, fm, left, depth + 1)?
            + self.refine(f, m, b, fm, frm, fb, right, depth + 1)?)
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}
