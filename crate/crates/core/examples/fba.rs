//! Fair validity: with mixed inputs the output is a nonfaulty input more
//! often than not, even with a corrupted party flipping its input.

use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::scenario::{Protocol, Scenario};
use abft_lab::sim::{PartyId, SchedulerSpec, TraceMode};

fn main() {
    let adv = AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(3), Behavior::InputFlip);
    let s = Scenario::new(Protocol::Fba, 4, 1).with_adversary(adv).with_inputs(["a", "b"]).with_k(3);
    let suite = s.run_suite(0..100, 1, TraceMode::Off).unwrap();
    // Outputs are hex: 61 = "a", 62 = "b", 63 = the flipped "c".
    println!("agreement={} outputs={:?}", suite.agreement_all, suite.outputs);
}
