//! `lwa` — run, audit, and benchmark budget-aware auctions for one
//! divisible good, scored by liquid welfare (`Σᵢ min(vᵢ(xᵢ), Bᵢ)`).
//!
//! Subcommands:
//!
//! - `run <mechanism> <file>`: execute one mechanism on one instance and
//!   print the allocation, payments, welfare, and welfare ratio.
//! - `audit <mechanism> [file | --random N COUNT]`: property checks
//!   (truthfulness under report deviations, budget feasibility, allocation
//!   monotonicity, welfare ratio against the exact optimum, and
//!   mechanism-specific structure). Exits 1 when any check fails and
//!   prints the failing witness as JSON.
//! - `oracle <file>`: the optimal liquid welfare and an allocation
//!   attaining it.
//! - `experiment <config>`: seeded batch comparison across mechanisms,
//!   written as CSV.
//!
//! Mechanisms: `clinching`, `uniform`, `two-bidder-43`,
//! `estimate-and-price`, `vickrey-capped`, `vcg-matching`, plus the
//! baselines `random-dump`, `broken-first-price`, and `optimal` (welfare
//! upper bound; not truthful). `vcg-matching` reads the matching-market
//! file form; everything else reads divisible-good instances.
//!
//! Exit codes: 0 success, 1 at least one audit check failed, 2 usage or
//! input errors. Set `LIQUID_LOG=info` or `LIQUID_LOG=debug` for progress
//! reporting on stderr.

mod experiment;
mod io;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use liquid_welfare::audit::{
    audit_instance, audit_market, audit_vickrey, random_instance, random_matching_market,
    run_mechanism, AuditReport, DeviationGrid, GeneratorConfig, Mechanism, ValuationKind,
};
use liquid_welfare::lw_oracle::{optimal_lw, OracleMethod};
use liquid_welfare::model::{Budget, Diagnostics, Instance, Outcome};
use liquid_welfare::special_mechanisms::{
    capped_vcg_matching, capped_vickrey, matching_liquid_welfare, optimal_matching_lw,
    MatchingMarket,
};
use liquid_welfare::liquid_welfare;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::OnceLock;

/// Stderr log threshold from `LIQUID_LOG`: 0 error (default), 1 info,
/// 2 debug.
pub fn log_level() -> u8 {
    static LEVEL: OnceLock<u8> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("LIQUID_LOG").as_deref() {
        Ok("debug") => 2,
        Ok("info") => 1,
        _ => 0,
    })
}

pub fn log_info(msg: impl AsRef<str>) {
    if log_level() >= 1 {
        eprintln!("[info] {}", msg.as_ref());
    }
}

pub fn log_debug(msg: impl AsRef<str>) {
    if log_level() >= 2 {
        eprintln!("[debug] {}", msg.as_ref());
    }
}

#[derive(Parser)]
#[command(
    name = "lwa",
    about = "Budget-aware auctions for a divisible good, scored by liquid welfare",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mechanism on one instance file.
    Run {
        /// Mechanism name (see `--help` for the list).
        mechanism: String,
        /// Instance file (JSON).
        file: PathBuf,
        /// Seed for randomized mechanisms (`random-dump`).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid resolution for the welfare optimum of curved instances.
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
    },
    /// Check mechanism properties on a file or on random instances.
    Audit {
        /// Mechanism name (see `--help` for the list).
        mechanism: String,
        /// Instance file (JSON); omit when using --random.
        file: Option<PathBuf>,
        /// Audit COUNT random instances with BIDDERS bidders each.
        #[arg(long, num_args = 2, value_names = ["BIDDERS", "COUNT"])]
        random: Option<Vec<usize>>,
        /// Seed for the random instance stream.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid resolution for welfare optima of curved instances.
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
    },
    /// Print the optimal liquid welfare of an instance.
    Oracle {
        /// Instance file (JSON).
        file: PathBuf,
        /// Grid resolution for curved instances (exact greedy is used for
        /// additive ones).
        #[arg(long, default_value_t = 1000)]
        resolution: usize,
    },
    /// Run a seeded batch experiment described by a JSON config.
    Experiment {
        /// Experiment config file (JSON).
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    // Die quietly when output is piped into a pager that exits early,
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { mechanism, file, seed, resolution } => {
            cmd_run(&mechanism, &file, seed, resolution)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Audit { mechanism, file, random, seed, resolution } => {
            cmd_audit(&mechanism, file.as_deref(), random.as_deref(), seed, resolution)
        }
        Command::Oracle { file, resolution } => {
            cmd_oracle(&file, resolution)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config } => {
            experiment::cmd_experiment(&config)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Mechanism names accepted on the command line: the divisible-good
/// mechanisms plus the two single-item/matching variants.
enum NamedMechanism {
    Divisible(Mechanism),
    VickreyCapped,
    VcgMatching,
}

fn parse_mechanism(name: &str, seed: u64) -> Result<NamedMechanism> {
    match name {
        "vickrey-capped" => Ok(NamedMechanism::VickreyCapped),
        "vcg-matching" => Ok(NamedMechanism::VcgMatching),
        other => {
            let mut mechanism = Mechanism::from_str(other).map_err(|e| {
                anyhow::anyhow!("{e}, vickrey-capped, vcg-matching")
            })?;
            if let Mechanism::RandomDump { seed: s } = &mut mechanism {
                *s = seed;
            }
            Ok(NamedMechanism::Divisible(mechanism))
        }
    }
}

/// Per-unit rates of an additive instance, or an error naming the
/// mechanism that needs them.
fn additive_rates_for(instance: &Instance, mechanism: &str) -> Result<Vec<f64>> {
    instance
        .additive_rates()
        .ok_or_else(|| anyhow::anyhow!("{mechanism} needs additive per-unit values"))
}

fn print_outcome_table(outcome: &Outcome) {
    println!("mechanism: {}", outcome.mechanism);
    for (i, (&x, &pay)) in outcome.allocation.iter().zip(&outcome.payments).enumerate() {
        println!("bidder {i}: allocation {x} payment {pay}");
    }
}

fn print_diagnostics(outcome: &Outcome) {
    match &outcome.diagnostics {
        Diagnostics::None => {}
        Diagnostics::Clinching { interval } => {
            println!("note: clock ran over the price interval [{}, {}]", interval.0, interval.1);
        }
        Diagnostics::Clearing { k, case, price } => {
            println!("note: cleared {k} bidder(s) at price {price} ({case})");
        }
        Diagnostics::Pivot { pivot, runner_up, took_half, guard_bound } => {
            let choice = if *took_half { "took the half-supply offer" } else { "kept the posted-price bundle" };
            let guard = if *guard_bound { "; budget guard limited the offer" } else { "" };
            println!("note: pivot bidder {pivot}, runner-up {runner_up}; {choice}{guard}");
        }
        Diagnostics::Matching { assignment } => {
            let pairs: Vec<String> =
                assignment.iter().enumerate().map(|(i, j)| format!("{i}->{j}")).collect();
            println!("note: matching {}", pairs.join(" "));
        }
        Diagnostics::Winner { winner } => {
            println!("note: winner {winner}");
        }
    }
}

fn print_welfare(lw: f64, optimum: f64) {
    println!("liquid welfare: {lw}");
    println!("optimal liquid welfare: {optimum}");
    if optimum > 0.0 {
        println!("ratio: {}", optimum / lw.max(f64::MIN_POSITIVE));
    }
}

fn cmd_run(mechanism: &str, file: &std::path::Path, seed: u64, resolution: usize) -> Result<()> {
    let named = parse_mechanism(mechanism, seed)?;
    match named {
        NamedMechanism::VcgMatching => {
            let market = load_market(file)?;
            let outcome = capped_vcg_matching(&market);
            print_outcome_table(&outcome);
            print_diagnostics(&outcome);
            let Diagnostics::Matching { assignment } = &outcome.diagnostics else {
                bail!("matching outcome carried no assignment");
            };
            let lw = matching_liquid_welfare(&market, assignment);
            print_welfare(lw, optimal_matching_lw(&market));
        }
        NamedMechanism::VickreyCapped => {
            let instance = io::load_instance(file)?;
            let rates = additive_rates_for(&instance, "vickrey-capped")?;
            let budgets: Vec<Budget> = instance.bidders().iter().map(|b| b.budget).collect();
            let outcome = capped_vickrey(&rates, &budgets);
            print_outcome_table(&outcome);
            print_diagnostics(&outcome);
            let lw: f64 = rates
                .iter()
                .zip(&budgets)
                .zip(&outcome.allocation)
                .map(|((&v, b), &x)| b.cap(v) * x)
                .sum();
            let best = rates.iter().zip(&budgets).map(|(&v, b)| b.cap(v)).fold(0.0, f64::max);
            print_welfare(lw, best);
        }
        NamedMechanism::Divisible(m) => {
            let instance = io::load_instance(file)?;
            log_debug(format!("running {m} on {} bidder(s)", instance.n()));
            let outcome = run_mechanism(&m, &instance)
                .with_context(|| format!("running {m} on {}", file.display()))?;
            print_outcome_table(&outcome);
            print_diagnostics(&outcome);
            let lw = liquid_welfare(&instance, &outcome.allocation)?;
            let oracle = optimal_lw(&instance, resolution)?;
            print_welfare(lw, oracle.optimum);
        }
    }
    Ok(())
}

fn load_market(file: &std::path::Path) -> Result<MatchingMarket> {
    match io::load_input(file)? {
        io::LoadedInput::Market(market) => Ok(market),
        io::LoadedInput::Instance(_) => bail!(
            "{} holds a divisible-good instance; vcg-matching needs the matching form",
            file.display()
        ),
    }
}

/// Print one report per line; failing reports additionally dump their
/// witness as JSON so the instance can be replayed.
fn print_reports(label: &str, reports: &[AuditReport], failures: &mut usize) {
    for report in reports {
        println!("{label}{report}");
        if report.failed() {
            *failures += 1;
            let json = serde_json::to_string_pretty(report).expect("report serializes");
            println!("{json}");
        }
    }
}

fn cmd_audit(
    mechanism: &str,
    file: Option<&std::path::Path>,
    random: Option<&[usize]>,
    seed: u64,
    resolution: usize,
) -> Result<ExitCode> {
    let named = parse_mechanism(mechanism, seed)?;
    let grid = DeviationGrid::default();
    let mut failures = 0usize;
    let mut checks = 0usize;

    match (file, random) {
        (Some(path), None) => {
            let reports = audit_one(&named, path, &grid, resolution)?;
            checks += reports.len();
            print_reports("", &reports, &mut failures);
        }
        (None, Some(spec)) => {
            let &[bidders, count] = spec else {
                bail!("--random takes exactly two arguments: BIDDERS COUNT");
            };
            if bidders < 2 {
                bail!("--random needs at least 2 bidders");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for index in 0..count {
                let label = format!("instance {index}: ");
                let reports = audit_random(&named, mechanism, bidders, &grid, resolution, &mut rng)?;
                checks += reports.len();
                print_reports(&label, &reports, &mut failures);
            }
        }
        (Some(_), Some(_)) => bail!("give either an instance file or --random, not both"),
        (None, None) => bail!("give an instance file or --random BIDDERS COUNT"),
    }

    println!("checks: {checks} run, {failures} failed");
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn audit_one(
    named: &NamedMechanism,
    path: &std::path::Path,
    grid: &DeviationGrid,
    resolution: usize,
) -> Result<Vec<AuditReport>> {
    Ok(match named {
        NamedMechanism::VcgMatching => audit_market(&load_market(path)?, grid),
        NamedMechanism::VickreyCapped => {
            let instance = io::load_instance(path)?;
            let rates = additive_rates_for(&instance, "vickrey-capped")?;
            let budgets: Vec<Budget> = instance.bidders().iter().map(|b| b.budget).collect();
            audit_vickrey(&rates, &budgets, grid)
        }
        NamedMechanism::Divisible(m) => audit_instance(m, &io::load_instance(path)?, grid, resolution),
    })
}

fn audit_random(
    named: &NamedMechanism,
    mechanism: &str,
    bidders: usize,
    grid: &DeviationGrid,
    resolution: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<AuditReport>> {
    Ok(match named {
        NamedMechanism::VcgMatching => audit_market(&random_matching_market(bidders, rng), grid),
        NamedMechanism::VickreyCapped => {
            let config = exact_count_config(bidders, ValuationKind::Additive, false);
            let instance = random_instance(&config, rng);
            let rates = instance.additive_rates().expect("additive generator");
            let budgets: Vec<Budget> = instance.bidders().iter().map(|b| b.budget).collect();
            audit_vickrey(&rates, &budgets, grid)
        }
        NamedMechanism::Divisible(m) => {
            let config = match m {
                Mechanism::TwoBidder43 => {
                    if bidders != 2 {
                        bail!("two-bidder-43 audits need exactly 2 bidders, got {bidders}");
                    }
                    let mut c = exact_count_config(2, ValuationKind::Additive, true);
                    c.infinite_budget_share = 0.0;
                    c
                }
                Mechanism::EstimateAndPrice => {
                    exact_count_config(bidders, ValuationKind::Mixed, false)
                }
                _ => exact_count_config(bidders, ValuationKind::Additive, false),
            };
            let instance = random_instance(&config, rng);
            log_debug(format!("auditing {mechanism} on a {}-bidder draw", instance.n()));
            audit_instance(m, &instance, grid, resolution)
        }
    })
}

fn exact_count_config(n: usize, kind: ValuationKind, equal_budgets: bool) -> GeneratorConfig {
    GeneratorConfig { min_bidders: n, max_bidders: n, kind, equal_budgets, ..GeneratorConfig::default() }
}

fn cmd_oracle(file: &std::path::Path, resolution: usize) -> Result<()> {
    match io::load_input(file)? {
        io::LoadedInput::Instance(instance) => {
            let oracle = optimal_lw(&instance, resolution)?;
            let method = match oracle.method {
                OracleMethod::Greedy => "greedy (exact for additive values)".to_string(),
                OracleMethod::GridDp => format!("grid dynamic program, resolution {resolution}"),
            };
            println!("optimal liquid welfare: {}", oracle.optimum);
            println!("method: {method}");
            for (i, &x) in oracle.allocation.iter().enumerate() {
                println!("bidder {i}: allocation {x}");
            }
        }
        io::LoadedInput::Market(market) => {
            println!("optimal liquid welfare: {}", optimal_matching_lw(&market));
            println!("method: exhaustive matching search");
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mechanism_names_parse() {
        assert!(matches!(parse_mechanism("clinching", 0).unwrap(), NamedMechanism::Divisible(Mechanism::Clinching)));
        assert!(matches!(parse_mechanism("vickrey-capped", 0).unwrap(), NamedMechanism::VickreyCapped));
        assert!(matches!(parse_mechanism("vcg-matching", 0).unwrap(), NamedMechanism::VcgMatching));
        assert!(matches!(
            parse_mechanism("random-dump", 7).unwrap(),
            NamedMechanism::Divisible(Mechanism::RandomDump { seed: 7 })
        ));
        assert!(parse_mechanism("nonsense", 0).is_err());
    }

    #[test]
    fn exact_count_config_pins_bidder_count() {
        let c = exact_count_config(5, ValuationKind::Concave, false);
        assert_eq!((c.min_bidders, c.max_bidders), (5, 5));
        assert_eq!(c.kind, ValuationKind::Concave);
    }
}
