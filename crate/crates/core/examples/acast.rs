//! A-Cast with an equivocating sender: nonfaulty parties either all deliver
//! the same value or none of them does.

use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::rbc::AcastFactory;
use abft_lab::sim::{run_simulation, PartyId, RunOptions, SchedulerSpec, SimConfig};

fn main() {
    let factory = AcastFactory { n: 4, t: 1, sender: PartyId(0), value: b"hello".to_vec() };
    for (label, adv) in [
        ("honest sender", AdversaryStrategy::honest(SchedulerSpec::Random)),
        ("equivocating sender", AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(0), Behavior::Equivocate)),
    ] {
        for seed in 0..3 {
            let r = run_simulation(&SimConfig::new(4, 1, seed), &factory, &adv, &RunOptions::default()).unwrap();
            let outs: Vec<String> = r.honest_outputs().iter().map(|(p, v)| format!("{p}={v}")).collect();
            println!("{label:<20} seed {seed}: agreement={} outputs [{}]", r.agreement(), outs.join(", "));
        }
    }
}
