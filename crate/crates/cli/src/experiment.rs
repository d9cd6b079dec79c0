//! Seeded batch comparison: run several mechanisms over one stream of
//! random instances, score each run against the exact welfare optimum,
//! and write a CSV of per-run rows plus per-mechanism summary rows.
//!
//! Determinism: the master seed yields one sub-seed per instance, and
//! each instance is drawn from its own freshly seeded generator, so the
//! instance stream does not depend on how many mechanisms run or in what
//! order rows are produced. With `record_runtime` off (the default) two
//! runs of the same config write byte-identical CSV.

use anyhow::{bail, Context, Result};
use liquid_welfare::audit::{random_instance, run_mechanism, GeneratorConfig, Mechanism};
use liquid_welfare::liquid_welfare;
use liquid_welfare::lw_oracle::optimal_lw;
use liquid_welfare::model::{Instance, TOL_SOLVER};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

fn default_resolution() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Mechanism names to compare (divisible-good mechanisms only).
    pub mechanisms: Vec<String>,
    /// Random instance distribution.
    #[serde(default)]
    pub generator: GeneratorConfig,
    /// How many instances to draw.
    pub instance_count: usize,
    /// Master seed for the instance stream.
    #[serde(default)]
    pub seed: u64,
    /// Grid resolution for welfare optima of curved instances.
    #[serde(default = "default_resolution")]
    pub oracle_resolution: usize,
    /// CSV output path.
    pub output: PathBuf,
    /// Fill the runtime column (off by default so output is
    /// byte-reproducible).
    #[serde(default)]
    pub record_runtime: bool,
}

/// One CSV data row.
struct Row {
    seed: u64,
    n: usize,
    mechanism: &'static str,
    lw: f64,
    lw_opt: f64,
    ratio: f64,
    revenue: f64,
    runtime_us: Option<u128>,
}

/// Sub-seeds drawn from the master seed, one per instance.
fn sub_seeds(seed: u64, count: usize) -> Vec<u64> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| master.gen()).collect()
}

/// Mechanisms for one instance; `random-dump` is re-seeded per instance
/// from the instance's own sub-seed.
fn resolve_mechanisms(names: &[String], sub_seed: u64) -> Result<Vec<Mechanism>> {
    names
        .iter()
        .map(|name| {
            let mut mechanism = Mechanism::from_str(name)
                .map_err(|e| anyhow::anyhow!("{e} (experiments run divisible-good mechanisms)"))?;
            if let Mechanism::RandomDump { seed } = &mut mechanism {
                *seed = sub_seed;
            }
            Ok(mechanism)
        })
        .collect()
}

fn instance_rows(config: &ExperimentConfig, sub_seed: u64) -> Result<Vec<Row>> {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
    let instance: Instance = random_instance(&config.generator, &mut rng);
    let oracle = optimal_lw(&instance, config.oracle_resolution)
        .with_context(|| format!("welfare oracle failed on instance seed {sub_seed}"))?;
    let mut rows = Vec::with_capacity(config.mechanisms.len());
    for mechanism in resolve_mechanisms(&config.mechanisms, sub_seed)? {
        let started = Instant::now();
        let outcome = run_mechanism(&mechanism, &instance)
            .with_context(|| format!("{mechanism} failed on instance seed {sub_seed}"))?;
        let runtime_us = config.record_runtime.then(|| started.elapsed().as_micros());
        let lw = liquid_welfare(&instance, &outcome.allocation)
            .with_context(|| format!("{mechanism} returned an infeasible allocation"))?;
        let ratio = if oracle.optimum <= TOL_SOLVER {
            1.0
        } else if lw <= 0.0 {
            f64::INFINITY
        } else {
            oracle.optimum / lw
        };
        rows.push(Row {
            seed: sub_seed,
            n: instance.n(),
            mechanism: mechanism.name(),
            lw,
            lw_opt: oracle.optimum,
            ratio,
            revenue: outcome.payments.iter().sum(),
            runtime_us,
        });
    }
    Ok(rows)
}

/// Run the whole experiment; returns the per-mechanism maximum ratio.
pub fn run_experiment(config: &ExperimentConfig) -> Result<BTreeMap<&'static str, f64>> {
    if config.mechanisms.is_empty() {
        bail!("experiment config lists no mechanisms");
    }
    if config.instance_count == 0 {
        bail!("experiment config asks for zero instances");
    }
    // Fail fast on unknown names before drawing anything.
    resolve_mechanisms(&config.mechanisms, 0)?;

    crate::log_info(format!(
        "running {} mechanism(s) on {} instance(s), master seed {}",
        config.mechanisms.len(),
        config.instance_count,
        config.seed
    ));

    let seeds = sub_seeds(config.seed, config.instance_count);
    let nested: Vec<Vec<Row>> = seeds
        .par_iter()
        .map(|&sub_seed| instance_rows(config, sub_seed))
        .collect::<Result<_>>()?;

    let mut out = String::new();
    out.push_str("seed,n,mechanism,lw,lw_opt,ratio,revenue,runtime_us\n");
    let mut max_ratio: BTreeMap<&'static str, f64> = BTreeMap::new();
    for row in nested.iter().flatten() {
        let runtime = row.runtime_us.map(|us| us.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.seed, row.n, row.mechanism, row.lw, row.lw_opt, row.ratio, row.revenue, runtime
        ));
        let entry = max_ratio.entry(row.mechanism).or_insert(0.0);
        *entry = entry.max(row.ratio);
    }
    for (mechanism, ratio) in &max_ratio {
        out.push_str(&format!("summary,,{mechanism},,,{ratio},,\n"));
    }

    let mut file = std::fs::File::create(&config.output)
        .with_context(|| format!("cannot create {}", config.output.display()))?;
    file.write_all(out.as_bytes())
        .with_context(|| format!("cannot write {}", config.output.display()))?;
    Ok(max_ratio)
}

pub fn cmd_experiment(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let config: ExperimentConfig = serde_json::from_str(&text)
        .with_context(|| format!("invalid experiment config {}", path.display()))?;
    let max_ratio = run_experiment(&config)?;
    for (mechanism, ratio) in &max_ratio {
        println!(
            "mechanism {mechanism}: max ratio {ratio} over {} instance(s)",
            config.instance_count
        );
    }
    println!("wrote {}", config.output.display());
    Ok(())
}
