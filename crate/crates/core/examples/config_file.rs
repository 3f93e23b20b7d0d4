//! Runs a scenario described in JSON, the same format `--config` reads.

use abft_lab::scenario::Scenario;
use abft_lab::sim::TraceMode;

const CONFIG: &str = r#"{
    "protocol": "fba",
    "n": 7,
    "t": 2,
    "k_override": 1,
    "inputs": ["x", "y", "y"],
    "adversary": {
        "corrupted": [
            {"party": 5, "behavior": {"kind": "silent"}},
            {"party": 6, "behavior": {"kind": "value-bias", "mode": {"bias-to-value": 1}}}
        ],
        "scheduler": {"name": "targeted-delay", "target": 0, "release": {"after-deliveries": 500}}
    }
}"#;

fn main() {
    let s: Scenario = serde_json::from_str(CONFIG).unwrap();
    let suite = s.run_suite(0..5, 1, TraceMode::Hash).unwrap();
    println!("{}", serde_json::to_string_pretty(&suite).unwrap());
}
