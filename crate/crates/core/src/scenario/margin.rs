//! Scripted coin runs: the per-iteration results `c'_r` are fixed up front,
//! failed iterations are rewritten per party, and only the final agreement
//! exchanges messages. This is how the counting argument is exercised at the
//! full iteration count.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{AdversaryStrategy, FailureMode, ShunBudget};
use crate::coin::{majority, CoinConfig, CoinFactory};
use crate::error::ConfigError;
use crate::sim::{run_simulation, PartyId, RunOptions, SimConfig};

#[derive(Clone, Debug)]
pub struct MarginPlan {
    pub n: usize,
    pub t: usize,
    pub k: u64,
    /// Ideal sequence `c'_1..c'_k`.
    pub ideal: Vec<bool>,
    /// Failed iterations (0-based) and what each party sees there instead.
    pub failures: Vec<(usize, FailureMode)>,
}

impl MarginPlan {
    /// `ones` ones placed uniformly among `k` iterations; `failed` distinct
    /// iterations set to `!toward` for every party.
    pub fn random(n: usize, t: usize, k: u64, ones: u64, failed: usize, toward_zero: bool, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ideal: Vec<bool> = (0..k).map(|i| i < ones).collect();
        ideal.shuffle(&mut rng);
        let mut idx: Vec<usize> = (0..k as usize).collect();
        idx.shuffle(&mut rng);
        let forced = FailureMode::BiasToValue(!toward_zero as u64);
        let failures = idx.into_iter().take(failed).map(|r| (r, forced.clone())).collect();
        MarginPlan { n, t, k, ideal, failures }
    }

    pub fn ideal_ones(&self) -> u64 {
        self.ideal.iter().filter(|b| **b).count() as u64
    }

    /// Each party's `b'_r` after failures are applied.
    pub fn scripts(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| {
                let mut bits = self.ideal.clone();
                for (r, mode) in &self.failures {
                    bits[*r] = mode.value_for(PartyId::new(i)) % 2 == 1;
                }
                bits
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginOutcome {
    pub ideal_ones: u64,
    pub failures_paid: u64,
    /// Per nonfaulty party: ones count seen and majority bit.
    pub majority: Vec<(u32, u64, bool)>,
    pub outputs: Vec<(u32, bool)>,
    pub agreement: bool,
}

/// Pays for every failure from an `n^2 - 1` budget, then runs the scripted
/// coin with the final agreement live under `adversary`.
pub fn margin_run(plan: &MarginPlan, adversary: &AdversaryStrategy, seed: u64) -> Result<MarginOutcome, ConfigError> {
    let mut budget = ShunBudget::maximal(plan.n);
    let root = CoinFactory::root();
    for (r, mode) in &plan.failures {
        let session = root.child(*r as u32 + 1);
        if !budget.try_consume_failure(&session, mode) {
            return Err(ConfigError::Other(format!("shun budget exhausted at failure {}", budget.consumed() + 1)));
        }
    }
    let factory = CoinFactory {
        config: CoinConfig::reduced(plan.n, plan.t, plan.k),
        script: Some(Arc::new(plan.scripts())),
    };
    let cfg = SimConfig::new(plan.n, plan.t, seed);
    let report = run_simulation(&cfg, &factory, adversary, &RunOptions::default())?;
    let majority_bits = report
        .honest()
        .filter_map(|p| {
            let c = report.party(p)?.coin();
            let ones = c.outcome().map(|o| o.ones_count)?;
            Some((p.0, ones, majority(ones, plan.k)))
        })
        .collect();
    Ok(MarginOutcome {
        ideal_ones: plan.ideal_ones(),
        failures_paid: budget.consumed(),
        majority: majority_bits,
        outputs: report.honest_outputs().into_iter().map(|(p, b)| (p.0, *b)).collect(),
        agreement: report.agreement(),
    })
}

