//! FairChoice over m = 3 with reduced coins: the histogram of chosen indices.

use abft_lab::fair::fair_choice_params;
use abft_lab::scenario::{Protocol, Scenario};
use abft_lab::sim::TraceMode;

fn main() {
    let params = fair_choice_params(3).unwrap();
    println!("{}", serde_json::to_string(&params).unwrap());
    let mut s = Scenario::new(Protocol::Fairchoice, 4, 1).with_k(1);
    s.m = Some(3);
    let suite = s.run_suite(0..60, 1, TraceMode::Off).unwrap();
    println!("agreement={} outputs={:?}", suite.agreement_all, suite.outputs);
}
