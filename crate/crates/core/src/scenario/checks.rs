//! Per-run structural invariants. Each returns human-readable violations.

use std::collections::BTreeSet;

use crate::acs::AcsParty;
use crate::ba::BaParty;
use crate::coin::{majority, CoinParty};
use crate::fair::{FairChoiceParty, FbaParty};
use crate::rbc::{AcastParty, Value};
use crate::sim::{Party, PartyId, PartySet, RunReport, TraceKind, TraceRecord};
use crate::svss::SvssParty;

/// Outcome of a check that can also be skipped for lack of data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Checked {
    Holds,
    Violated(String),
    NotApplicable,
}

pub fn common<P: Party>(r: &RunReport<P>, agreement: bool) -> Vec<String> {
    let mut v = Vec::new();
    if !agreement {
        v.push("agreement: nonfaulty outputs differ".into());
    }
    if !r.all_honest_output() && !r.hit_cap {
        v.push("termination: queue drained before every nonfaulty party output".into());
    }
    if r.shun_records != r.budget.consumed() {
        v.push(format!("shun: {} records vs {} tokens consumed", r.shun_records, r.budget.consumed()));
    }
    let n = r.config.n as u64;
    if r.budget.consumed() >= n * n {
        v.push(format!("shun: {} failures reach n^2", r.budget.consumed()));
    }
    for (tag, s) in r.functionality.sessions() {
        if !s.binding_holds(&r.corrupted) {
            v.push(format!("binding: {tag} outputs differ from the bound value without a failure"));
        }
    }
    v
}

/// Every sent message id is delivered at most once and only after being sent.
pub fn exactly_once(trace: &[TraceRecord]) -> Checked {
    if trace.is_empty() {
        return Checked::NotApplicable;
    }
    let id = |d: &str| d.split_whitespace().find_map(|w| w.strip_prefix("id=")).map(str::to_string);
    let mut sent = BTreeSet::new();
    let mut delivered = BTreeSet::new();
    for rec in trace {
        match rec.kind {
            TraceKind::Send => {
                if let Some(i) = id(&rec.detail) {
                    if !sent.insert(i.clone()) {
                        return Checked::Violated(format!("message {i} sent twice"));
                    }
                }
            }
            TraceKind::Deliver => {
                let Some(i) = id(&rec.detail) else { continue };
                if !sent.contains(&i) {
                    return Checked::Violated(format!("message {i} delivered before send"));
                }
                if !delivered.insert(i.clone()) {
                    return Checked::Violated(format!("message {i} delivered twice"));
                }
            }
            _ => {}
        }
    }
    Checked::Holds
}

pub fn acast(r: &RunReport<AcastParty>, sender: PartyId, value: &[u8]) -> Vec<String> {
    if r.corrupted.contains(sender) {
        return Vec::new();
    }
    r.honest_outputs()
        .into_iter()
        .filter(|(_, o)| o.0 != value)
        .map(|(p, o)| format!("acast validity: {p} delivered {o} from a nonfaulty sender"))
        .collect()
}

pub fn ba(r: &RunReport<BaParty>, inputs: &[bool]) -> Vec<String> {
    let honest_inputs: BTreeSet<bool> = r.honest().map(|p| inputs[p.index() % inputs.len()]).collect();
    let mut v = Vec::new();
    if honest_inputs.len() == 1 {
        let b = *honest_inputs.iter().next().unwrap();
        for (p, o) in r.honest_outputs() {
            if *o != b {
                v.push(format!("ba validity: {p} decided {o} on unanimous input {b}"));
            }
        }
    }
    v
}

/// Standalone SVSS parties may reconstruct different sessions; they agree if
/// every session reconstructed by two nonfaulty parties without a paid
/// failure gave both the same value.
pub fn svss_consistent(r: &RunReport<SvssParty>) -> bool {
    r.functionality.sessions().values().all(|s| {
        s.failure.is_some() || {
            let vals: BTreeSet<u64> =
                s.rec_output.iter().filter(|(p, _)| !r.corrupted.contains(**p)).map(|(_, v)| *v).collect();
            vals.len() <= 1
        }
    })
}

pub fn svss(r: &RunReport<SvssParty>) -> Vec<String> {
    let mut v = Vec::new();
    for (tag, s) in r.functionality.sessions() {
        if r.corrupted.contains(s.dealer) {
            continue;
        }
        for (p, out) in &s.rec_output {
            if !r.corrupted.contains(*p) && s.failure.is_none() && *out != s.secret {
                v.push(format!("svss correctness: {p} reconstructed {out} in {tag}, dealer shared {}", s.secret));
            }
        }
    }
    v
}

fn subset_checks(label: &str, s: PartySet, n: usize, t: usize, supported: impl Fn(PartyId) -> bool) -> Vec<String> {
    let mut v = Vec::new();
    if s.len() < n - t {
        v.push(format!("{label} size: |S|={} < n-t={}", s.len(), n - t));
    }
    for j in s.iter() {
        if !supported(j) {
            v.push(format!("{label} support: {j} in S with no nonfaulty predicate"));
        }
    }
    v
}

pub fn acs(r: &RunReport<AcsParty>) -> Vec<String> {
    let (n, t) = (r.config.n, r.config.t);
    let mut v = Vec::new();
    let honest: Vec<&AcsParty> = r.honest().filter_map(|p| r.party(p)).collect();
    for p in &honest {
        if let Some(s) = p.acs().output() {
            v.extend(subset_checks("acs", s, n, t, |j| honest.iter().any(|h| h.acs().predicate().contains(j))));
        }
    }
    v
}

pub fn coin(r: &RunReport<CoinParty>) -> Vec<String> {
    let (n, t) = (r.config.n, r.config.t);
    let mut v = Vec::new();
    let honest: Vec<(PartyId, &CoinParty)> = r.honest().filter_map(|p| r.party(p).map(|x| (p, x))).collect();
    for (p, party) in &honest {
        let c = party.coin();
        for it in c.iterations() {
            let Some(s) = it.subset else { continue };
            v.extend(subset_checks(&format!("coin/{}", it.r), s, n, t, |j| {
                honest.iter().any(|(_, h)| h.coin().iterations().get(it.r as usize - 1).is_some_and(|x| x.completed.contains(j)))
            }));
            if let Some(x) = it.xor_result {
                let want = it.reduced().values().fold(false, |a, b| a ^ b);
                if x != want || it.reconstructed.len() != s.len() {
                    v.push(format!("coin xor: {p} iteration {}", it.r));
                }
            }
        }
        if let Some(o) = c.outcome() {
            if o.majority_bit != majority(o.ones_count, c.k()) {
                v.push(format!("coin majority: {p} has {} ones of {}", o.ones_count, c.k()));
            }
        }
    }
    v
}

pub fn fairchoice(r: &RunReport<FairChoiceParty>, m: u64) -> Vec<String> {
    r.honest_outputs()
        .into_iter()
        .filter(|(_, o)| **o >= m)
        .map(|(p, o)| format!("fairchoice range: {p} output {o} >= m={m}"))
        .collect()
}

pub fn fba(r: &RunReport<FbaParty>, inputs: &[Vec<u8>]) -> Vec<String> {
    let mut v = Vec::new();
    let honest_inputs: BTreeSet<&[u8]> = r.honest().map(|p| inputs[p.index() % inputs.len()].as_slice()).collect();
    for p in r.honest() {
        let Some(party) = r.party(p) else { continue };
        let st = party.state();
        if let (Some(maj), Some(s)) = (st.majority_value(), st.subset()) {
            let outs = st.acast_outputs();
            let support = s.iter().filter(|j| outs.get(&j.0).is_some_and(|x| x == maj)).count();
            if 2 * support <= s.len() {
                v.push(format!("fba majority: {p} took a value with {support} of {}", s.len()));
            }
        }
        if let (Some(out), Some(s)) = (st.output(), st.subset()) {
            let outs = st.acast_outputs();
            if !s.iter().any(|j| outs.get(&j.0).is_some_and(|x| *x == out.0)) {
                v.push(format!("fba output: {p} output {out} not delivered by any member of S"));
            }
        }
        if honest_inputs.len() == 1 {
            let want = Value(honest_inputs.iter().next().unwrap().to_vec());
            if st.output().is_some_and(|o| *o != want) {
                v.push(format!("fba validity: {p} output differs from unanimous input {want}"));
            }
        }
    }
    v
}
