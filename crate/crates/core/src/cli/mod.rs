//! Command-line runner. Exit codes: 0 success, 1 an invariant or bound
//! failed, 2 the configuration was rejected.

mod config;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

pub use config::{BoundsGrid, RunConfig, SeedRange};

use crate::analysis::{self, BoundReport, CentralBinomialCheck, EnumerationCheck};
use crate::error::ConfigError;
use crate::fair::fair_choice_params;
use crate::scenario::{Protocol, RunSummary, Scenario, SuiteSummary};
use crate::sim::{write_jsonl, TraceMode};

#[derive(Debug, Parser)]
#[command(name = "abft-lab", version, about = "Asynchronous BFT simulation and bound checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Inclusive seed range, e.g. 0..499.
    #[arg(long, global = true)]
    pub seed_range: Option<SeedRange>,
    /// Output directory for summaries, reports and traces.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ScenarioFlags {
    #[arg(long)]
    pub protocol: Option<Protocol>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub k_override: Option<u64>,
    #[arg(long)]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub m: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a protocol over a seed range and check per-run invariants.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioFlags,
    },
    /// Check the coin tail bound and the FairChoice bounds.
    VerifyBounds {
        #[command(flatten)]
        common: Common,
        /// Negative control: divide every coin k by this.
        #[arg(long)]
        k_divisor: Option<u64>,
    },
    /// Estimate Pr[output = 1] of a bit-valued protocol over a seed range.
    EstimateBias {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioFlags,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Print k(ε, n) and the FairChoice parameters for m.
    Params {
        #[arg(long, default_value = "1/4")]
        epsilon: String,
        #[arg(long, default_value_t = 4)]
        n: u64,
        #[arg(long, default_value_t = 3)]
        m: u64,
    },
}

/// Failure that maps to an exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1.
    Check(String),
    /// Exit 2.
    Config(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<crate::error::ParamError> for Failure {
    fn from(e: crate::error::ParamError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Simulate { common, scenario } => simulate(&common, &scenario),
        Command::VerifyBounds { common, k_divisor } => verify_bounds(&common, k_divisor),
        Command::EstimateBias { common, scenario, sigma } => estimate_bias(&common, &scenario, sigma),
        Command::Params { epsilon, n, m } => params(&epsilon, n, m),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    Ok(match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn scenario_from(cfg: &RunConfig, flags: &ScenarioFlags) -> Result<Scenario, Failure> {
    let mut s = match (&cfg.scenario, flags.protocol) {
        (Some(s), None) => s.clone(),
        (Some(s), Some(p)) if s.protocol == p => s.clone(),
        (_, Some(p)) => Scenario::new(p, 4, 1),
        (None, None) => return Err(Failure::Config("no scenario: pass --config or --protocol".into())),
    };
    if let Some(n) = flags.n {
        s.n = n;
    }
    if let Some(t) = flags.t {
        s.t = t;
    }
    if flags.k_override.is_some() {
        s.k_override = flags.k_override;
    }
    if flags.epsilon.is_some() {
        s.epsilon = flags.epsilon.clone();
    }
    if flags.m.is_some() {
        s.m = flags.m;
    }
    s.validate()?;
    Ok(s)
}

fn seeds(common: &Common, cfg: &RunConfig) -> SeedRange {
    common.seed_range.or(cfg.seeds).unwrap_or(SeedRange { first: 0, last: 0 })
}

fn workers(common: &Common, cfg: &RunConfig) -> usize {
    common.workers.or(cfg.workers).unwrap_or(1).max(1)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn run_seeds(
    scenario: &Scenario,
    range: SeedRange,
    workers: usize,
    trace: TraceMode,
    trace_dir: Option<&Path>,
) -> Result<SuiteSummary, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::Config(e.to_string()))?;
    let runs: Result<Vec<RunSummary>, Failure> = pool.install(|| {
        range
            .iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|seed| {
                let out = scenario.run(*seed, trace)?;
                if let Some(dir) = trace_dir {
                    let path = dir.join(format!("seed-{seed}.jsonl"));
                    let f = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
                    write_jsonl(BufWriter::new(f), &out.trace).map_err(|e| io_err(&path, e))?;
                }
                Ok(out.summary)
            })
            .collect()
    });
    Ok(SuiteSummary::new(scenario, runs?))
}

fn simulate(common: &Common, flags: &ScenarioFlags) -> Result<(), Failure> {
    let cfg = load(common)?;
    let scenario = scenario_from(&cfg, flags)?;
    let range = seeds(common, &cfg);
    let trace = match (cfg.trace, &common.out) {
        (Some(t), _) => t,
        (None, Some(_)) => TraceMode::Collect,
        (None, None) => TraceMode::Hash,
    };
    let trace_dir = match (&common.out, trace) {
        (Some(out), TraceMode::Collect) => {
            let dir = out.join("traces");
            fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            Some(dir)
        }
        (Some(out), _) => {
            fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
            None
        }
        _ => None,
    };
    let summary = run_seeds(&scenario, range, workers(common, &cfg), trace, trace_dir.as_deref())?;
    if let Some(out) = &common.out {
        write_json(&out.join("summary.json"), &summary)?;
    }
    println!(
        "{} n={} t={} adversary={} runs={} agreement={} terminated={}/{} hit_cap={} shuns={} violation_runs={} outputs={}",
        summary.protocol.name(),
        summary.n,
        summary.t,
        summary.adversary,
        summary.runs,
        summary.agreement_all,
        summary.terminated,
        summary.runs,
        summary.hit_cap,
        summary.shun_total,
        summary.violation_runs,
        serde_json::to_string(&summary.outputs).unwrap_or_default()
    );
    if summary.clean() {
        Ok(())
    } else {
        let first = summary.per_seed.values().find(|r| !r.violations.is_empty()).expect("some run failed");
        Err(Failure::Check(format!("seed {}: {}", first.seed, first.violations.join("; "))))
    }
}

/// Everything `verify-bounds` writes to `bounds.json`.
#[derive(Debug, Serialize)]
pub struct BoundsReport {
    pub precision_bits: u32,
    pub reports: Vec<BoundReport>,
    pub central_binomial: CentralBinomialCheck,
    pub enumeration: Vec<EnumerationCheck>,
    /// Closed form strictly decreasing across the `m` grid.
    pub decreasing: bool,
    pub all_hold: bool,
}

/// Runs the full bound grid. `Err` names an inconclusive query.
pub fn bounds_report(grid: &BoundsGrid, precision_bits: u32) -> Result<BoundsReport, Failure> {
    let inconclusive = |what: String| move |e: crate::error::ParamError| Failure::Check(format!("{what}: {e}"));
    let coin: Result<Vec<BoundReport>, Failure> = grid
        .coin
        .iter()
        .map(|(n, e)| {
            let eps = analysis::parse_ratio(e)?;
            let k = analysis::coin_k(&eps, *n, precision_bits).map_err(inconclusive(format!("coin n={n} ε={e}")))?;
            let mut r = match grid.k_divisor {
                Some(d) if d > 1 => {
                    let mut r = BoundReport::coin(&analysis::verify_coin_bound_at(*n, &eps, k / d), precision_bits);
                    r.query = format!("{} (k/{d})", r.query);
                    r
                }
                _ => BoundReport::coin(&analysis::verify_coin_bound_at(*n, &eps, k), precision_bits),
            };
            r.precision_bits = precision_bits;
            Ok(r)
        })
        .collect();
    let mut reports = coin?;
    for m in &grid.m {
        let b = analysis::fairchoice_bound(*m, precision_bits).map_err(inconclusive(format!("fairchoice m={m}")))?;
        reports.push(BoundReport::fairchoice(&b, precision_bits));
    }
    let decreasing = match (grid.m.iter().min(), grid.m.iter().max()) {
        (Some(lo), Some(hi)) if lo < hi => analysis::fairchoice_decreasing(*lo..=*hi, precision_bits)
            .map_err(inconclusive("fairchoice differences".into()))?
            .iter()
            .all(|(_, _, dec)| *dec),
        _ => true,
    };
    let central_binomial = analysis::central_binomial_bound(grid.binomial_mu, precision_bits)
        .map_err(inconclusive("central binomial".into()))?;
    let enumeration: Result<Vec<EnumerationCheck>, Failure> = grid
        .enumeration
        .iter()
        .map(|m| analysis::fairchoice_enumeration(*m).map_err(Failure::from))
        .collect();
    let enumeration = enumeration?;
    let all_hold = reports.iter().all(|r| r.holds)
        && decreasing
        && central_binomial.violations.is_empty()
        && enumeration.iter().all(|e| e.failures.is_empty());
    Ok(BoundsReport { precision_bits, reports, central_binomial, enumeration, decreasing, all_hold })
}

fn verify_bounds(common: &Common, k_divisor: Option<u64>) -> Result<(), Failure> {
    let cfg = load(common)?;
    let mut grid = cfg.bounds.clone();
    if k_divisor.is_some() {
        grid.k_divisor = k_divisor;
    }
    if grid.m.iter().any(|m| *m < 3) || grid.enumeration.iter().any(|m| *m < 3) {
        return Err(Failure::Config("m must be at least 3".into()));
    }
    for (n, e) in &grid.coin {
        analysis::parse_ratio(e).and_then(|r| analysis::coin_k(&r, *n, 64).map(|_| ()))?;
    }
    let bits = analysis::precision_bits();
    let report = bounds_report(&grid, bits)?;
    for r in &report.reports {
        println!("{} {} value={:.6} bound={:.6} slack={:+.6e}", if r.holds { "ok  " } else { "FAIL" }, r.query, r.value, r.bound, r.slack);
    }
    println!(
        "central binomial μ<={}: {} violations; enumeration {:?}: {} failures; decreasing={}",
        grid.binomial_mu,
        report.central_binomial.violations.len(),
        grid.enumeration,
        report.enumeration.iter().map(|e| e.failures.len()).sum::<usize>(),
        report.decreasing
    );
    if let Some(out) = &common.out {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        write_json(&out.join("bounds.json"), &report)?;
    }
    if report.all_hold {
        Ok(())
    } else {
        let bad: Vec<&str> = report.reports.iter().filter(|r| !r.holds).map(|r| r.query.as_str()).collect();
        Err(Failure::Check(format!("bounds not met: {}", if bad.is_empty() { "see report".into() } else { bad.join(", ") })))
    }
}

#[derive(Debug, Serialize)]
struct BiasReport {
    protocol: Protocol,
    seeds: SeedRange,
    excluded: usize,
    estimate: analysis::BiasEstimate,
    sigma: f64,
    epsilon: String,
    /// Both outcomes reach `1/2 - ε` within the confidence interval.
    consistent: bool,
}

fn estimate_bias(common: &Common, flags: &ScenarioFlags, sigma: Option<f64>) -> Result<(), Failure> {
    let cfg = load(common)?;
    let scenario = scenario_from(&cfg, flags)?;
    if !matches!(scenario.protocol, Protocol::Coin | Protocol::Ba) {
        return Err(Failure::Config("estimate-bias needs a bit-valued protocol (coin or ba)".into()));
    }
    let range = seeds(common, &cfg);
    let sigma = sigma.unwrap_or(cfg.sigma);
    let summary = run_seeds(&scenario, range, workers(common, &cfg), TraceMode::Off, None)?;
    let samples: Vec<bool> =
        summary.per_seed.values().filter_map(|r| r.common_output.as_ref().and_then(|v| v.as_bool())).collect();
    let excluded = summary.runs - samples.len();
    let estimate = analysis::estimate_bias(&samples, sigma).map_err(|e| Failure::Check(e.to_string()))?;
    let eps_text = scenario.epsilon.clone().unwrap_or_else(|| "1/4".into());
    let eps = analysis::ratio_to_f64_str(&eps_text)?;
    let p = estimate.p_hat_f64();
    let floor = 0.5 - eps;
    let consistent = p + estimate.half_width >= floor && (1.0 - p) + estimate.half_width >= floor;
    println!(
        "p_hat={p:.4} half_width={:.4} samples={} excluded={excluded} floor={floor:.4} consistent={consistent}",
        estimate.half_width, estimate.samples
    );
    let report = BiasReport { protocol: scenario.protocol, seeds: range, excluded, estimate, sigma, epsilon: eps_text, consistent };
    if let Some(out) = &common.out {
        fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        write_json(&out.join("bias.json"), &report)?;
    }
    if !summary.clean() {
        return Err(Failure::Check(format!("{} runs violated invariants", summary.violation_runs)));
    }
    if consistent {
        Ok(())
    } else {
        Err(Failure::Check(format!("Pr[output=1] = {p:.4} ± {:.4} leaves an outcome below {floor:.4}", report.estimate.half_width)))
    }
}

fn params(epsilon: &str, n: u64, m: u64) -> Result<(), Failure> {
    let eps = analysis::parse_ratio(epsilon)?;
    let bits = analysis::precision_bits();
    let k = analysis::coin_k(&eps, n, bits)?;
    let fc = fair_choice_params(m)?;
    let out = serde_json::json!({
        "coin": { "epsilon": eps.to_string(), "n": n, "k": k },
        "fair_choice": fc,
        "precision_bits": bits,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("params serialize"));
    Ok(())
}
