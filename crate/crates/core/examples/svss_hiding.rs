//! The ideal sharing functionality: a nonfaulty dealer's secret stays out of
//! the adversary's view until a nonfaulty party asks for reconstruction.

use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::sim::{PartyId, RunOptions, SchedulerSpec, SimConfig};
use abft_lab::svss::{hiding_probe, SvssFactory, SvssParty};

fn main() {
    let factory = SvssFactory { n: 4, t: 1, instances: 1, secrets: vec![] };
    let adv = AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(3), Behavior::EchoHonest);
    for seed in 0..5 {
        let cfg = SimConfig::new(4, 1, seed);
        for dealer in 0..3 {
            let session = SvssParty::session(0, dealer);
            let hidden = hiding_probe(&cfg, &factory, &adv, &RunOptions::default(), &session, (0, 1)).unwrap();
            println!("seed {seed} {session}: view independent of secret = {hidden}");
        }
    }
}
