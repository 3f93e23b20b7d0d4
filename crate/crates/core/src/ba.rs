//! Randomized binary Byzantine agreement with local coins.
//!
//! Each round has three steps. Every step message is sent by A-Cast under
//! `<session>/<round>/<step>/<origin>` with a one-byte value: bit 0 is the
//! binary value, bit 1 marks a step-3 "decide" proposal. A message counts
//! only once it is *valid*: some `n - t` valid messages of the previous step
//! could have led an honest party to send it. A-Cast removes equivocation and
//! validation removes wrong values, which together make agreement hold at
//! `n = 3t + 1`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::ProtocolError;
use crate::rbc::Acast;
use crate::sim::{Context, Envelope, Label, Party, PartyFactory, PartyId, PartySet, Seg, SessionTag};

const D_FLAG: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaPhase {
    Idle,
    Propose,
    Vote,
    Coin,
    Done,
}

#[derive(Clone, Debug)]
struct StepState {
    acasts: Vec<Option<Acast>>,
    pending: Vec<(PartyId, u8)>,
    valid: PartySet,
    order: Vec<u8>,
    counts: [usize; 4],
}

impl StepState {
    fn new(n: usize) -> Self {
        StepState { acasts: vec![None; n], pending: Vec::new(), valid: PartySet::empty(), order: Vec::new(), counts: [0; 4] }
    }
}

type Round = [StepState; 3];

/// One party's view of one agreement instance.
#[derive(Clone, Debug)]
pub struct Ba {
    session: SessionTag,
    n: usize,
    t: usize,
    rounds: BTreeMap<u32, Round>,
    input: Option<bool>,
    round: u32,
    step: u8,
    estimate: bool,
    output: Option<bool>,
    decided_round: Option<u32>,
    halted: bool,
}

impl Ba {
    pub fn new(session: SessionTag, n: usize, t: usize) -> Self {
        Ba {
            session,
            n,
            t,
            rounds: BTreeMap::new(),
            input: None,
            round: 0,
            step: 0,
            estimate: false,
            output: None,
            decided_round: None,
            halted: false,
        }
    }

    pub fn session(&self) -> &SessionTag {
        &self.session
    }

    pub fn input(&self) -> Option<bool> {
        self.input
    }

    pub fn started(&self) -> bool {
        self.input.is_some()
    }

    pub fn output(&self) -> Option<bool> {
        self.output
    }

    pub fn decided_round(&self) -> Option<u32> {
        self.decided_round
    }

    /// Round currently being executed (0 before start).
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn phase(&self) -> BaPhase {
        match (self.input, self.halted, self.step) {
            (None, ..) => BaPhase::Idle,
            (_, true, _) => BaPhase::Done,
            (_, _, 1) => BaPhase::Propose,
            (_, _, 2) => BaPhase::Vote,
            _ => BaPhase::Coin,
        }
    }

    /// Begins with `input`. Later calls are ignored. Returns a decision if
    /// buffered traffic already completes the instance.
    pub fn start(&mut self, ctx: &mut Context<'_>, input: bool) -> Option<bool> {
        if self.input.is_some() {
            return None;
        }
        self.input = Some(input);
        self.estimate = input;
        self.round = 1;
        self.step = 1;
        ctx.note(&self.session, || format!("input={}", input as u8));
        self.propose(ctx, 1, 1, input as u8);
        self.progress(ctx)
    }

    fn round_mut(&mut self, r: u32) -> &mut Round {
        let n = self.n;
        self.rounds.entry(r).or_insert_with(|| [StepState::new(n), StepState::new(n), StepState::new(n)])
    }

    fn propose(&mut self, ctx: &mut Context<'_>, r: u32, s: u8, value: u8) {
        let me = ctx.me();
        let (n, t) = (self.n, self.t);
        let tag = self.session.child(r).child2(s as u32, me.0);
        let slot = &mut self.round_mut(r)[s as usize - 1].acasts[me.index()];
        let a = slot.get_or_insert_with(|| Acast::new(tag, me, n, t));
        let _ = a.send(ctx, &[value]);
    }

    /// Handles a message under this instance's session. Returns the decision
    /// if this message caused it.
    pub fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<Option<bool>, ProtocolError> {
        let from = env.from.party().ok_or(ProtocolError::UnexpectedSender("F".into()))?;
        let (r, s, origin) = match env.session.strip(&self.session) {
            Some(&[Seg::Index(r), Seg::Index(s), Seg::Index(o)]) if r >= 1 && (1..=3).contains(&s) && (o as usize) < self.n => {
                (r, s as u8, PartyId(o))
            }
            _ => return Err(ProtocolError::UnknownSession),
        };
        if self.decided_round.is_some_and(|d| r > d + 1) {
            return Ok(None);
        }
        let (n, t) = (self.n, self.t);
        let session = &env.session;
        let st = &mut self.round_mut(r)[s as usize - 1];
        let a = st.acasts[origin.index()].get_or_insert_with(|| Acast::new(session.clone(), origin, n, t));
        if !a.on_message(ctx, from, &env.payload)? {
            return Ok(None);
        }
        match a.output() {
            Some(&[b]) if b <= 3 => st.pending.push((origin, b)),
            _ => return Ok(None),
        }
        self.revalidate(r, s);
        Ok(self.progress(ctx))
    }

    fn counts(&self, r: u32, s: u8) -> [usize; 4] {
        self.rounds.get(&r).map_or([0; 4], |round| round[s as usize - 1].counts)
    }

    fn is_valid(&self, r: u32, s: u8, b: u8) -> bool {
        let (n, t) = (self.n, self.t);
        let m = n - t;
        match s {
            1 if b > 1 => false,
            1 if r == 1 => true,
            1 => {
                let c = self.counts(r - 1, 3);
                let (dv, d) = (c[(D_FLAG | b) as usize], c[2] + c[3]);
                let plain = c[0] + c[1];
                (dv > t && d + plain >= m) || d.min(t) + plain >= m
            }
            2 if b > 1 => false,
            2 => {
                let c = self.counts(r, 1);
                if b == 1 {
                    let ones = c[1].min(m);
                    let zeros = m - ones;
                    zeros <= c[0] && ones > zeros
                } else {
                    let zeros = c[0].min(m);
                    let ones = m - zeros;
                    ones <= c[1] && zeros >= ones
                }
            }
            _ => {
                let c = self.counts(r, 2);
                let half = n / 2;
                if b & D_FLAG != 0 {
                    c[(b & 1) as usize] > half && c[0] + c[1] >= m
                } else {
                    c[0].min(half) + c[1].min(half) >= m
                }
            }
        }
    }

    fn revalidate(&mut self, r: u32, s: u8) {
        let mut work = vec![(r, s)];
        while let Some((r, s)) = work.pop() {
            let Some(round) = self.rounds.get(&r) else { continue };
            let pending = round[s as usize - 1].pending.clone();
            let fresh: Vec<(PartyId, u8)> = pending.into_iter().filter(|&(_, b)| self.is_valid(r, s, b)).collect();
            if fresh.is_empty() {
                continue;
            }
            let st = &mut self.rounds.get_mut(&r).expect("round exists")[s as usize - 1];
            st.pending.retain(|p| !fresh.contains(p));
            for (j, b) in fresh {
                if st.valid.insert(j) {
                    st.order.push(b);
                    st.counts[b as usize] += 1;
                }
            }
            work.push(if s == 3 { (r + 1, 1) } else { (r, s + 1) });
        }
    }

    fn progress(&mut self, ctx: &mut Context<'_>) -> Option<bool> {
        let (n, t) = (self.n, self.t);
        let m = n - t;
        let mut decided = None;
        while self.input.is_some() && !self.halted {
            let (r, s) = (self.round, self.step);
            let Some(round) = self.rounds.get(&r) else { break };
            let st = &round[s as usize - 1];
            if st.order.len() < m {
                break;
            }
            let mut c = [0usize; 4];
            for &b in &st.order[..m] {
                c[b as usize] += 1;
            }
            match s {
                1 => {
                    self.estimate = c[1] > c[0];
                    self.step = 2;
                    self.propose(ctx, r, 2, self.estimate as u8);
                }
                2 => {
                    let v = if c[1] > n / 2 {
                        D_FLAG | 1
                    } else if c[0] > n / 2 {
                        D_FLAG
                    } else {
                        self.estimate as u8
                    };
                    self.step = 3;
                    self.propose(ctx, r, 3, v);
                }
                _ => {
                    let (v, dv) = if c[3] >= c[2] { (true, c[3]) } else { (false, c[2]) };
                    if dv > 2 * t {
                        if self.output.is_none() {
                            self.output = Some(v);
                            self.decided_round = Some(r);
                            decided = Some(v);
                            ctx.note(&self.session, || format!("decide={} round={r}", v as u8));
                        }
                        self.estimate = v;
                    } else if dv > t {
                        self.estimate = v;
                    } else {
                        let tag = self.session.child(r);
                        self.estimate = ctx.random_bit(&tag);
                    }
                    if self.decided_round.is_some_and(|d| r > d) {
                        self.halted = true;
                        break;
                    }
                    self.round = r + 1;
                    self.step = 1;
                    self.propose(ctx, r + 1, 1, self.estimate as u8);
                }
            }
        }
        decided
    }
}

/// Standalone agreement under session `ba`.
pub struct BaParty {
    ba: Ba,
    input: bool,
}

impl BaParty {
    pub fn state(&self) -> &Ba {
        &self.ba
    }
}

impl Party for BaParty {
    type Output = bool;

    fn start(&mut self, ctx: &mut Context<'_>) {
        self.ba.start(ctx, self.input);
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        self.ba.on_message(ctx, env).map(|_| ())
    }

    fn output(&self) -> Option<&bool> {
        self.ba.output.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct BaFactory {
    pub n: usize,
    pub t: usize,
    pub inputs: Vec<bool>,
}

impl PartyFactory for BaFactory {
    type Party = BaParty;

    fn build(&self, id: PartyId, flip_input: bool) -> BaParty {
        let input = self.inputs[id.index() % self.inputs.len()] ^ flip_input;
        BaParty { ba: Ba::new(SessionTag::root(Label::Ba), self.n, self.t), input }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryStrategy;
    use crate::sim::{run_simulation, RunOptions, SchedulerSpec, SimConfig};

    fn run(inputs: Vec<bool>, seed: u64, sched: SchedulerSpec) -> crate::sim::RunReport<BaParty> {
        let cfg = SimConfig::new(4, 1, seed);
        let f = BaFactory { n: 4, t: 1, inputs };
        run_simulation(&cfg, &f, &AdversaryStrategy::honest(sched), &RunOptions::default()).unwrap()
    }

    #[test]
    fn unanimous_inputs_decide_in_round_one() {
        for bit in [false, true] {
            let r = run(vec![bit; 4], 1, SchedulerSpec::Fifo);
            assert_eq!(r.common_output(), Some(&bit));
            for p in PartyId::all(4) {
                assert_eq!(r.party(p).unwrap().state().decided_round(), Some(1));
                assert_eq!(r.party(p).unwrap().state().phase(), BaPhase::Done);
            }
        }
    }

    #[test]
    fn mixed_inputs_agree() {
        for seed in 0..20 {
            let r = run(vec![true, false, true, false], seed, SchedulerSpec::Random);
            assert!(r.all_honest_output(), "seed {seed}");
            assert!(r.agreement(), "seed {seed}");
            assert!(!r.hit_cap);
        }
    }
}
