//! Named protocol runs: build the factory for a [`Scenario`], run one seed,
//! check the structural invariants and summarise the result.

mod checks;
mod margin;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acs::AcsFactory;
use crate::adversary::AdversaryStrategy;
use crate::analysis::parse_ratio;
use crate::ba::BaFactory;
use crate::coin::{CoinConfig, CoinFactory};
use crate::error::ConfigError;
use crate::fair::{ChoiceMode, FairChoiceFactory, FbaFactory};
use crate::rbc::AcastFactory;
use crate::sim::{run_simulation, PartyId, RunOptions, RunReport, SimConfig, TraceMode, TraceRecord};
use crate::svss::{SvssFactory, SvssOptions};

pub use checks::{exactly_once, Checked};
pub use margin::{margin_run, MarginOutcome, MarginPlan};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Acast,
    Ba,
    Svss,
    Acs,
    Coin,
    Fairchoice,
    Fba,
}

impl Protocol {
    pub const ALL: [Protocol; 7] =
        [Protocol::Acast, Protocol::Ba, Protocol::Svss, Protocol::Acs, Protocol::Coin, Protocol::Fairchoice, Protocol::Fba];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Acast => "acast",
            Protocol::Ba => "ba",
            Protocol::Svss => "svss",
            Protocol::Acs => "acs",
            Protocol::Coin => "coin",
            Protocol::Fairchoice => "fairchoice",
            Protocol::Fba => "fba",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Protocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ConfigError::Other(format!("unknown protocol {s:?}")))
    }
}

fn default_max_events() -> u64 {
    1_000_000
}

/// One protocol run description, minus the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub protocol: Protocol,
    pub n: usize,
    pub t: usize,
    #[serde(default)]
    pub adversary: AdversaryStrategy,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    /// Coin ε as `"a/b"` or a decimal; defaults to `1/4`.
    #[serde(default)]
    pub epsilon: Option<String>,
    /// Iterations per coin in coin, fairchoice and fba runs.
    #[serde(default)]
    pub k_override: Option<u64>,
    /// FairChoice range; defaults to 3.
    #[serde(default)]
    pub m: Option<u64>,
    /// Per-party inputs, reused cyclically: `"0"`/`"1"` for ba, byte strings
    /// for fba, the sender's value for acast.
    #[serde(default)]
    pub inputs: Option<Vec<String>>,
    /// A-Cast sender; defaults to party 0.
    #[serde(default)]
    pub sender: Option<u32>,
    /// SVSS rounds; defaults to 1.
    #[serde(default)]
    pub instances: Option<u32>,
    /// FBA: replace FairChoice with a fixed index.
    #[serde(default)]
    pub choice_stub: Option<u64>,
    #[serde(default)]
    pub svss: SvssOptions,
}

impl Scenario {
    pub fn new(protocol: Protocol, n: usize, t: usize) -> Self {
        Scenario {
            protocol,
            n,
            t,
            adversary: AdversaryStrategy::default(),
            max_events: default_max_events(),
            epsilon: None,
            k_override: None,
            m: None,
            inputs: None,
            sender: None,
            instances: None,
            choice_stub: None,
            svss: SvssOptions::default(),
        }
    }

    pub fn with_adversary(mut self, adversary: AdversaryStrategy) -> Self {
        self.adversary = adversary;
        self
    }

    pub fn with_k(mut self, k: u64) -> Self {
        self.k_override = Some(k);
        self
    }

    pub fn with_inputs<S: Into<String>>(mut self, inputs: impl IntoIterator<Item = S>) -> Self {
        self.inputs = Some(inputs.into_iter().map(Into::into).collect());
        self
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig::new(self.n, self.t, seed).with_max_events(self.max_events)
    }

    /// Everything that can be rejected without running.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim_config(0).validate()?;
        self.adversary.corrupted_set(&self.sim_config(0))?;
        self.adversary.budget.build(self.n)?;
        match self.protocol {
            Protocol::Coin => {
                self.coin_config()?;
            }
            Protocol::Fairchoice => {
                crate::fair::fair_choice_params(self.m.unwrap_or(3))?;
            }
            Protocol::Fba => {
                self.fba_factory()?;
            }
            Protocol::Ba => {
                self.ba_inputs()?;
            }
            Protocol::Acast => {
                let s = self.sender.unwrap_or(0) as usize;
                if s >= self.n {
                    return Err(ConfigError::PartyOutOfRange { index: s, n: self.n });
                }
            }
            Protocol::Svss | Protocol::Acs => {}
        }
        if self.svss.modulus < 3 {
            return Err(ConfigError::Other("svss modulus must be at least 3".into()));
        }
        Ok(())
    }

    fn coin_config(&self) -> Result<CoinConfig, ConfigError> {
        let eps = parse_ratio(self.epsilon.as_deref().unwrap_or("1/4"))?;
        let c = CoinConfig::new(eps, self.n, self.t)?;
        Ok(match self.k_override {
            Some(k) => c.with_k_override(k),
            None => c,
        })
    }

    fn ba_inputs(&self) -> Result<Vec<bool>, ConfigError> {
        match &self.inputs {
            None => Ok(vec![false, true]),
            Some(v) if v.is_empty() => Err(ConfigError::Other("inputs must not be empty".into())),
            Some(v) => v
                .iter()
                .map(|s| match s.as_str() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(ConfigError::Other(format!("ba input must be 0 or 1, got {other:?}"))),
                })
                .collect(),
        }
    }

    fn byte_inputs(&self, default: &[&str]) -> Vec<Vec<u8>> {
        match &self.inputs {
            Some(v) if !v.is_empty() => v.iter().map(|s| s.as_bytes().to_vec()).collect(),
            _ => default.iter().map(|s| s.as_bytes().to_vec()).collect(),
        }
    }

    fn fba_factory(&self) -> Result<FbaFactory, ConfigError> {
        let mode = match self.choice_stub {
            Some(k) => ChoiceMode::Stub(k),
            None => ChoiceMode::Protocol { k_override: self.k_override },
        };
        FbaFactory::new(self.n, self.t, self.byte_inputs(&["a", "b"]), mode)
    }

    /// Runs one seed.
    pub fn run(&self, seed: u64, trace: TraceMode) -> Result<RunOutput, ConfigError> {
        self.validate()?;
        let cfg = self.sim_config(seed);
        let mut opts = RunOptions::traced(trace);
        opts.svss = self.svss.clone();
        let n = self.n;
        match self.protocol {
            Protocol::Acast => {
                let sender = PartyId(self.sender.unwrap_or(0));
                let value = self.byte_inputs(&["v"]).swap_remove(0);
                let f = AcastFactory { n, t: self.t, sender, value: value.clone() };
                self.finish(seed, run_simulation(&cfg, &f, &self.adversary, &opts)?, |r| {
                    checks::acast(r, sender, &value)
                })
            }
            Protocol::Ba => {
                let f = BaFactory { n, t: self.t, inputs: self.ba_inputs()? };
                let inputs = f.inputs.clone();
                self.finish(seed, run_simulation(&cfg, &f, &self.adversary, &opts)?, |r| checks::ba(r, &inputs))
            }
            Protocol::Svss => {
                let f = SvssFactory { n, t: self.t, instances: self.instances.unwrap_or(1), secrets: vec![] };
                let report = run_simulation(&cfg, &f, &self.adversary, &opts)?;
                let agreement = checks::svss_consistent(&report);
                self.finish_with(seed, report, agreement, checks::svss)
            }
            Protocol::Acs => {
                let f = AcsFactory::new(n, self.t);
                self.finish(seed, run_simulation(&cfg, &f, &self.adversary, &opts)?, checks::acs)
            }
            Protocol::Coin => {
                let f = CoinFactory::new(self.coin_config()?);
                self.finish(seed, run_simulation(&cfg, &f, &self.adversary, &opts)?, checks::coin)
            }
            Protocol::Fairchoice => {
                let f = FairChoiceFactory::new(n, self.t, self.m.unwrap_or(3), self.k_override)?;
                let m = f.params.m;
                self.finish(seed, run_simulation(&cfg, &f, &self.adversary, &opts)?, |r| checks::fairchoice(r, m))
            }
            Protocol::Fba => {
                let f = self.fba_factory()?;
                let inputs = f.inputs.clone();
                self.finish(seed, run_simulation(&cfg, &f, &self.adversary, &opts)?, |r| checks::fba(r, &inputs))
            }
        }
    }

    fn finish<P: crate::sim::Party>(
        &self,
        seed: u64,
        report: RunReport<P>,
        check: impl FnOnce(&RunReport<P>) -> Vec<String>,
    ) -> Result<RunOutput, ConfigError> {
        let agreement = report.agreement();
        self.finish_with(seed, report, agreement, check)
    }

    fn finish_with<P: crate::sim::Party>(
        &self,
        seed: u64,
        report: RunReport<P>,
        agreement: bool,
        check: impl FnOnce(&RunReport<P>) -> Vec<String>,
    ) -> Result<RunOutput, ConfigError> {
        let mut violations = checks::common(&report, agreement);
        violations.extend(check(&report));
        let outputs = report
            .outcomes
            .iter()
            .map(|o| serde_json::to_value(o).expect("outcomes serialize"))
            .collect();
        let honest_output = report.common_output().map(|o| serde_json::to_value(o).expect("outputs serialize"));
        let summary = RunSummary {
            seed,
            protocol: self.protocol,
            adversary: self.adversary.label(),
            outputs,
            common_output: honest_output,
            agreement,
            terminated: report.all_honest_output(),
            hit_cap: report.hit_cap,
            deliveries: report.deliveries,
            shun_count: report.shun_records,
            budget_consumed: report.budget.consumed(),
            dropped: report.dropped,
            trace_hash: report.trace_hash.clone(),
            violations,
        };
        Ok(RunOutput { summary, trace: report.trace })
    }

    /// Runs `seeds` on a pool of `workers` threads. Results are keyed by seed,
    /// so the outcome does not depend on the worker count.
    pub fn run_suite(
        &self,
        seeds: impl IntoIterator<Item = u64>,
        workers: usize,
        trace: TraceMode,
    ) -> Result<SuiteSummary, ConfigError> {
        self.validate()?;
        let seeds: Vec<u64> = seeds.into_iter().collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| ConfigError::Other(e.to_string()))?;
        let runs: Result<Vec<RunSummary>, ConfigError> =
            pool.install(|| seeds.par_iter().map(|s| self.run(*s, trace).map(|o| o.summary)).collect());
        Ok(SuiteSummary::new(self, runs?))
    }
}

/// Result of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub protocol: Protocol,
    pub adversary: String,
    /// Per party: `{"status": ..., "value": ...}`.
    pub outputs: Vec<serde_json::Value>,
    /// The nonfaulty output when every nonfaulty party output the same value.
    pub common_output: Option<serde_json::Value>,
    pub agreement: bool,
    /// Every nonfaulty party produced an output.
    pub terminated: bool,
    pub hit_cap: bool,
    pub deliveries: u64,
    pub shun_count: u64,
    pub budget_consumed: u64,
    pub dropped: u64,
    pub trace_hash: Option<String>,
    /// Failed structural invariants, empty on a clean run.
    pub violations: Vec<String>,
}

pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: Vec<TraceRecord>,
}

/// Aggregate over a seed set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub protocol: Protocol,
    pub n: usize,
    pub t: usize,
    pub adversary: String,
    pub runs: usize,
    pub agreement_all: bool,
    pub terminated: usize,
    pub hit_cap: usize,
    pub violation_runs: usize,
    pub shun_total: u64,
    /// Count of runs per common nonfaulty output (`"none"` when absent).
    pub outputs: BTreeMap<String, usize>,
    pub per_seed: BTreeMap<u64, RunSummary>,
}

impl SuiteSummary {
    pub fn new(s: &Scenario, runs: Vec<RunSummary>) -> Self {
        let mut outputs = BTreeMap::new();
        for r in &runs {
            let key = r.common_output.as_ref().map_or("none".to_string(), |v| v.to_string());
            *outputs.entry(key).or_insert(0) += 1;
        }
        SuiteSummary {
            protocol: s.protocol,
            n: s.n,
            t: s.t,
            adversary: s.adversary.label(),
            runs: runs.len(),
            agreement_all: runs.iter().all(|r| r.agreement),
            terminated: runs.iter().filter(|r| r.terminated).count(),
            hit_cap: runs.iter().filter(|r| r.hit_cap).count(),
            violation_runs: runs.iter().filter(|r| !r.violations.is_empty()).count(),
            shun_total: runs.iter().map(|r| r.shun_count).sum(),
            outputs,
            per_seed: runs.into_iter().map(|r| (r.seed, r)).collect(),
        }
    }

    pub fn clean(&self) -> bool {
        self.violation_runs == 0
    }
}

/// One corrupted party (the last index) per built-in behavior.
pub fn builtin_adversaries(n: usize, schedulers: &[crate::sim::SchedulerSpec]) -> Vec<AdversaryStrategy> {
    let last = PartyId::new(n - 1);
    let mut out = Vec::new();
    for s in schedulers {
        out.push(AdversaryStrategy::honest(s.clone()));
        for b in crate::adversary::Behavior::catalogue() {
            out.push(AdversaryStrategy::honest(s.clone()).corrupt(last, b));
        }
    }
    out
}
