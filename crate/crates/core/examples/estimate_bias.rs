//! Empirical Pr[coin = 1] with a 3-sigma interval.

use abft_lab::analysis::estimate_bias;
use abft_lab::scenario::{Protocol, Scenario};
use abft_lab::sim::TraceMode;

fn main() {
    let suite = Scenario::new(Protocol::Coin, 4, 1).with_k(3).run_suite(0..200, 1, TraceMode::Off).unwrap();
    let samples: Vec<bool> = suite.per_seed.values().filter_map(|r| r.common_output.as_ref()?.as_bool()).collect();
    let e = estimate_bias(&samples, 3.0).unwrap();
    println!("samples={} p_hat={:.4} +/- {:.4}", e.samples, e.p_hat_f64(), e.half_width);
}
