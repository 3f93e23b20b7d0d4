//! Binary Byzantine agreement against every built-in behavior.

use abft_lab::scenario::{builtin_adversaries, Protocol, Scenario};
use abft_lab::sim::{SchedulerSpec, TraceMode};

fn main() {
    for adv in builtin_adversaries(4, &[SchedulerSpec::Random]) {
        let s = Scenario::new(Protocol::Ba, 4, 1).with_inputs(["0", "1", "1", "0"]).with_adversary(adv);
        let suite = s.run_suite(0..50, 1, TraceMode::Off).unwrap();
        println!(
            "{:<28} agreement={} terminated={}/{} outputs={:?}",
            suite.adversary, suite.agreement_all, suite.terminated, suite.runs, suite.outputs
        );
    }
}
