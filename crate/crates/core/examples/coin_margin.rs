//! Full-k coin with scripted iteration results: a majority that clears k/2 by
//! more than n^2 survives every failure the budget can pay for.

use abft_lab::adversary::{AdversaryStrategy, FailureMode};
use abft_lab::coin::coin_params;
use abft_lab::scenario::{margin_run, MarginPlan};
use abft_lab::sim::SchedulerSpec;
use num_bigint::BigInt;
use num_rational::BigRational;

fn main() {
    let eps = BigRational::new(BigInt::from(1), BigInt::from(4));
    let k = coin_params(&eps, 4).unwrap();
    let adv = AdversaryStrategy::honest(SchedulerSpec::Random);
    for (ones, label) in [(k / 2 + 17, "margin k/2+17"), (k / 2 + 5, "margin k/2+5")] {
        let mut plan = MarginPlan::random(4, 1, k, ones, 0, false, 7);
        // Spend every failure on an iteration that came out 1.
        plan.failures = plan
            .ideal
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .take(15)
            .map(|(r, _)| (r, FailureMode::BiasToValue(0)))
            .collect();
        let out = margin_run(&plan, &adv, 7).unwrap();
        println!("k={k} {label}: failures paid {}, majorities {:?}, outputs {:?}", out.failures_paid, out.majority, out.outputs);
    }
}
