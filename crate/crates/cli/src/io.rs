//! Instance files: human-editable JSON fixtures for divisible-good
//! instances and matching markets.
//!
//! Divisible instance:
//!
//! ```json
//! {
//!   "supply": 1.0,
//!   "bidders": [
//!     { "value": 2.0, "budget": 1.0 },
//!     { "valuation": { "breakpoints": [[0,0],[0.5,2],[1,2.5]], "concave": true },
//!       "budget": "inf" }
//!   ]
//! }
//! ```
//!
//! A bidder is either additive (`value` = per-unit rate) or piecewise
//! linear (`breakpoints` = (quantity, value) pairs over fractions of the
//! supply). Budgets are numbers or the string `"inf"`. `supply` defaults
//! to 1 and scales additive rates at load time; quantities in the output
//! are always fractions of the whole supply.
//!
//! Matching market:
//!
//! ```json
//! { "matching": { "values": [[5,1],[4,2]], "budgets": [3, "inf"] } }
//! ```

use anyhow::{bail, Context, Result};
use liquid_welfare::model::{Bidder, Budget, Instance, Valuation};
use liquid_welfare::special_mechanisms::MatchingMarket;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    #[serde(default = "default_supply")]
    pub supply: f64,
    pub bidders: Vec<BidderFile>,
}

fn default_supply() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BidderFile {
    #[serde(flatten)]
    pub value: ValueSpec,
    pub budget: Budget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Additive { value: f64 },
    Curve { valuation: CurveFile },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveFile {
    pub breakpoints: Vec<(f64, f64)>,
    #[serde(default)]
    pub concave: bool,
}

/// Wrapper selecting the matching-market form of an input document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchingFile {
    pub matching: MatchingMarket,
}

/// Either kind of input document; the matching form is recognized by its
/// top-level `matching` key.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputDocument {
    Matching(MatchingFile),
    Divisible(InstanceFile),
}

/// A parsed and validated input.
#[derive(Debug, Clone)]
pub enum LoadedInput {
    Instance(Instance),
    Market(MatchingMarket),
}

impl InstanceFile {
    pub fn to_instance(&self) -> Result<Instance> {
        let bidders: Vec<Bidder> = self
            .bidders
            .iter()
            .map(|b| {
                let valuation = match &b.value {
                    ValueSpec::Additive { value } => Valuation::additive(*value),
                    ValueSpec::Curve { valuation } => Valuation::piecewise(
                        valuation.breakpoints.clone(),
                        valuation.concave,
                    ),
                };
                Bidder { valuation, budget: b.budget }
            })
            .collect();
        Instance::validate(self.supply, bidders).context("invalid instance")
    }

    /// Serialize a (normalized, unit-supply) instance back to the file
    /// schema.
    #[cfg(test)]
    pub fn from_instance(instance: &Instance) -> InstanceFile {
        let bidders = instance
            .bidders()
            .iter()
            .map(|b| {
                let value = match &b.valuation {
                    Valuation::Additive { rate } => ValueSpec::Additive { value: *rate },
                    Valuation::PiecewiseLinear { points, concave } => ValueSpec::Curve {
                        valuation: CurveFile { breakpoints: points.clone(), concave: *concave },
                    },
                };
                BidderFile { value, budget: b.budget }
            })
            .collect();
        InstanceFile { supply: 1.0, bidders }
    }
}

/// Parse an input document from text.
pub fn parse_input(text: &str) -> Result<LoadedInput> {
    let document: InputDocument =
        serde_json::from_str(text).context("parse error: not a valid instance document")?;
    match document {
        InputDocument::Matching(m) => {
            m.matching.validate().context("invalid matching market")?;
            Ok(LoadedInput::Market(m.matching))
        }
        InputDocument::Divisible(file) => Ok(LoadedInput::Instance(file.to_instance()?)),
    }
}

/// Load an input document from disk.
pub fn load_input(path: &Path) -> Result<LoadedInput> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    parse_input(&text).with_context(|| format!("in {}", path.display()))
}

/// Load an input that must be a divisible-good instance.
pub fn load_instance(path: &Path) -> Result<Instance> {
    match load_input(path)? {
        LoadedInput::Instance(instance) => Ok(instance),
        LoadedInput::Market(_) => {
            bail!("{} holds a matching market; this command needs a divisible-good instance", path.display())
        }
    }
}
