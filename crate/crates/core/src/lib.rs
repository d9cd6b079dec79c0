//! Budget-constrained auctions for a single divisible good, scored by
//! liquid welfare — the most value an allocation admits to pay for,
//! `Σᵢ min(vᵢ(xᵢ), Bᵢ)`.
//!
//! The crate provides:
//!
//! - [`model`]: domain types (valuations, budgets, instances, outcomes),
//!   budgeted quasi-linear utility, and the liquid-welfare objective.
//! - [`lw_oracle`]: exact greedy and grid-DP oracles for the optimal
//!   liquid welfare, used as benchmarks by every mechanism test.
//! - [`myerson`]: payment synthesis for monotone allocation rules via the
//!   integral payment identity, with breakpoint-aware adaptive quadrature.
//! - [`clinching`]: the ascending-clock auction where bidders clinch
//!   quantity whenever rival money runs short of the remnant supply;
//!   event-driven closed-form integration plus an ε-step oracle.
//! - [`uniform_price`]: market clearing at a single per-unit price with
//!   integral payments.
//! - [`special_mechanisms`]: capped-value second-price/VCG variants, the
//!   two-bidder 4/3-approximation auction, and a random baseline.
//! - [`estimate_and_price`]: posted-price mechanism for curved valuations
//!   and private budgets, pricing against the runner-up's half-supply value.
//! - [`audit`]: property checks (truthfulness, budget feasibility,
//!   monotonicity, approximation ratios) plus seeded instance generators.
//!
//! All quantities are fractions of one divisible unit; supply is
//! normalized at validation time. Numerics are plain `f64` throughout:
//! the pinned tolerances (see [`model::TOL_SOLVER`] and friends) are
//! calibrated to double precision.

pub mod audit;
pub mod clinching;
pub mod estimate_and_price;
pub mod lw_oracle;
pub mod model;
pub mod myerson;
pub mod special_mechanisms;
pub mod uniform_price;

pub use model::{
    liquid_welfare, utility, Bidder, Budget, Instance, ModelError, Outcome, Valuation,
    TOL_AUDIT, TOL_BISECT, TOL_SOLVER,
};
