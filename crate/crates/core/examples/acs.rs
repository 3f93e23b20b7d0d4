//! CommonSubset while one nonfaulty party's traffic is held back.

use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::scenario::{Protocol, Scenario};
use abft_lab::sim::{Direction, PartyId, Release, SchedulerSpec, TraceMode};

fn main() {
    let sched = SchedulerSpec::TargetedDelay { target: PartyId(0), direction: Direction::Both, release: Release::Never };
    let adv = AdversaryStrategy::honest(sched).corrupt(PartyId(3), Behavior::Equivocate);
    let s = Scenario::new(Protocol::Acs, 4, 1).with_adversary(adv);
    for seed in 0..8 {
        let out = s.run(seed, TraceMode::Off).unwrap().summary;
        println!(
            "seed {seed}: subset {} violations {:?}",
            out.common_output.map_or("-".into(), |v| v.to_string()),
            out.violations
        );
    }
}
