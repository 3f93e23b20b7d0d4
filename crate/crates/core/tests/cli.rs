use std::path::Path;
use std::process::Command;

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_abft-lab"))
        .args(args)
        .env("ABFT_PRECISION_BITS", "128")
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn verify_bounds_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(cli(&["verify-bounds", "--out", out]).0, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(report["all_hold"], true);
    assert_eq!(report["precision_bits"], 128);
}

#[test]
fn shrunken_k_is_caught() {
    // k/2 still clears the bound on the default grid; k/8 does not.
    assert_eq!(cli(&["verify-bounds", "--k-divisor", "2"]).0, 0);
    assert_eq!(cli(&["verify-bounds", "--k-divisor", "8"]).0, 1);
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(cli(&["simulate", "--protocol", "ba", "--n", "3", "--t", "1", "--seed-range", "0..1"]).0, 2);
    assert_eq!(cli(&["params", "--epsilon", "0.7"]).0, 2);
    assert_eq!(cli(&["simulate", "--protocol", "paxos", "--seed-range", "0..1"]).0, 2);
    assert_eq!(cli(&["simulate", "--config", "/nonexistent/run.json"]).0, 2);
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"scenario": {"protocol": "ba", "n": 4, "t": 1, "colour": 3}}"#);
    assert_eq!(cli(&["simulate", "--config", &bad]).0, 2);
}

#[test]
fn params_reports_frozen_k() {
    let (code, stdout) = cli(&["params", "--epsilon", "1/4", "--n", "4", "--m", "3"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["coin"]["k"], 12268);
    assert_eq!(v["fair_choice"]["N"], 32);
}

#[test]
fn simulate_writes_traces_and_identical_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"scenario": {"protocol": "fba", "n": 4, "t": 1, "k_override": 1,
            "adversary": {"corrupted": [{"party": 3, "behavior": {"kind": "equivocate"}}]}}}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "2")] {
        let code = cli(&["simulate", "--config", &cfg, "--seed-range", "0..3", "--out", out.to_str().unwrap(), "--workers", workers]).0;
        assert_eq!(code, 0);
    }
    let sa = std::fs::read(a.join("summary.json")).unwrap();
    assert_eq!(sa, std::fs::read(b.join("summary.json")).unwrap());
    for s in 0..=3 {
        let trace = std::fs::read_to_string(a.join(format!("traces/seed-{s}.jsonl"))).unwrap();
        assert_eq!(trace, std::fs::read_to_string(b.join(format!("traces/seed-{s}.jsonl"))).unwrap());
        for line in trace.lines() {
            serde_json::from_str::<serde_json::Value>(line).unwrap();
        }
    }
}

#[test]
fn estimate_bias_on_coin() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _) = cli(&["estimate-bias", "--protocol", "coin", "--k-override", "3", "--seed-range", "0..59", "--out", out]);
    assert_eq!(code, 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bias.json")).unwrap()).unwrap();
    assert_eq!(v["estimate"]["samples"], 60);
}
