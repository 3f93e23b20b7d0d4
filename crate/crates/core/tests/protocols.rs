use abft_lab::adversary::{AdversaryStrategy, Behavior};
use abft_lab::fair::{kth_biggest, ChoiceMode, FbaFactory};
use abft_lab::scenario::{builtin_adversaries, exactly_once, Checked, Protocol, Scenario};
use abft_lab::sim::{run_simulation, PartyId, RunOptions, SchedulerSpec, SimConfig, TraceMode};
use proptest::prelude::*;

fn small(protocol: Protocol) -> Scenario {
    Scenario::new(protocol, 4, 1).with_k(1)
}

#[test]
fn every_envelope_is_delivered_at_most_once() {
    for protocol in Protocol::ALL {
        for adv in builtin_adversaries(4, &[SchedulerSpec::Random, SchedulerSpec::Fifo]) {
            for seed in 0..3 {
                let out = small(protocol).with_adversary(adv.clone()).run(seed, TraceMode::Collect).unwrap();
                assert_eq!(exactly_once(&out.trace), Checked::Holds, "{} {} seed {seed}", protocol.name(), adv.label());
                assert!(out.summary.violations.is_empty(), "{:?}", out.summary.violations);
            }
        }
    }
}

#[test]
fn summaries_do_not_depend_on_worker_count() {
    let s = small(Protocol::Coin)
        .with_adversary(AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(3), Behavior::Equivocate));
    let one = serde_json::to_string(&s.run_suite(0..12, 1, TraceMode::Hash).unwrap()).unwrap();
    let three = serde_json::to_string(&s.run_suite(0..12, 3, TraceMode::Hash).unwrap()).unwrap();
    assert_eq!(one, three);
}

#[test]
fn different_seeds_give_different_traces() {
    let s = small(Protocol::Ba);
    let a = s.run(1, TraceMode::Hash).unwrap().summary.trace_hash;
    let b = s.run(2, TraceMode::Hash).unwrap().summary.trace_hash;
    assert_ne!(a, b);
}

#[test]
fn stub_choice_zero_picks_largest_index_in_subset() {
    let inputs: Vec<Vec<u8>> = ["a", "b", "c", "d"].iter().map(|s| s.as_bytes().to_vec()).collect();
    let f = FbaFactory::new(4, 1, inputs.clone(), ChoiceMode::Stub(0)).unwrap();
    for seed in 0..20 {
        let r = run_simulation(&SimConfig::new(4, 1, seed), &f, &AdversaryStrategy::default(), &RunOptions::default())
            .unwrap();
        assert!(r.agreement());
        for p in r.honest() {
            let fba = r.party(p).unwrap().state();
            let s = fba.subset().unwrap();
            let top = kth_biggest(&s, 0).unwrap();
            assert_eq!(fba.output().unwrap().0, inputs[top.index()], "seed {seed}");
        }
    }
}

#[test]
fn fba_majority_short_circuits_choice() {
    let s = small(Protocol::Fba).with_inputs(["x", "x", "x", "y"]);
    for seed in 0..10 {
        let out = s.run(seed, TraceMode::Off).unwrap().summary;
        assert_eq!(out.common_output, Some(serde_json::json!("78")));
    }
}

#[test]
fn silent_party_cannot_stall_agreement() {
    let adv = AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(0), Behavior::Silent);
    for protocol in [Protocol::Ba, Protocol::Acs, Protocol::Coin, Protocol::Fairchoice, Protocol::Fba] {
        let suite = small(protocol).with_adversary(adv.clone()).run_suite(0..10, 1, TraceMode::Off).unwrap();
        assert_eq!(suite.terminated, 10, "{}", protocol.name());
        assert!(suite.agreement_all && suite.clean());
    }
}

#[test]
fn unanimous_ba_keeps_its_input() {
    for bit in ["0", "1"] {
        let s = small(Protocol::Ba)
            .with_inputs([bit])
            .with_adversary(AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(3), Behavior::InputFlip));
        let suite = s.run_suite(0..30, 1, TraceMode::Off).unwrap();
        let want = serde_json::json!(bit == "1");
        assert!(suite.per_seed.values().all(|r| r.common_output.as_ref() == Some(&want)), "{bit}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ba_agrees_under_any_seed(seed in any::<u64>(), who in 0u32..4, b in 0usize..6) {
        let behavior = Behavior::catalogue()[b % Behavior::catalogue().len()].clone();
        let adv = AdversaryStrategy::honest(SchedulerSpec::Random).corrupt(PartyId(who), behavior);
        let out = small(Protocol::Ba).with_adversary(adv).run(seed, TraceMode::Off).unwrap().summary;
        prop_assert!(out.agreement && out.terminated && out.violations.is_empty());
    }

    #[test]
    fn acs_subsets_are_large_and_supported(seed in any::<u64>(), target in 0u32..3) {
        let sched = SchedulerSpec::TargetedDelay {
            target: PartyId(target),
            direction: Default::default(),
            release: abft_lab::sim::Release::Never,
        };
        let adv = AdversaryStrategy::honest(sched).corrupt(PartyId(3), Behavior::Equivocate);
        let out = small(Protocol::Acs).with_adversary(adv).run(seed, TraceMode::Off).unwrap().summary;
        prop_assert!(out.agreement && out.violations.is_empty());
    }

    #[test]
    fn replay_is_deterministic(seed in any::<u64>()) {
        let s = small(Protocol::Fairchoice);
        let a = s.run(seed, TraceMode::Hash).unwrap().summary;
        let b = s.run(seed, TraceMode::Hash).unwrap().summary;
        prop_assert_eq!(a, b);
    }
}
