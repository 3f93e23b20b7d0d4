//! The common coin at a reduced iteration count. Pass `k` as the first
//! argument (default 3).

use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::scenario::{Protocol, Scenario};
use abft_lab::sim::{PartyId, SchedulerSpec, TraceMode};

fn main() {
    let k = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let adv = AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(3), Behavior::Garble);
    let s = Scenario::new(Protocol::Coin, 4, 1).with_adversary(adv).with_k(k);
    let suite = s.run_suite(0..100, 1, TraceMode::Off).unwrap();
    println!("k={k} runs={} agreement={} outputs={:?}", suite.runs, suite.agreement_all, suite.outputs);
}
