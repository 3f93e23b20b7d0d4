//! CommonSubset: `n` agreement instances gated by a monotone predicate,
//! producing a set of at least `k` indices agreed on by every nonfaulty party.

use crate::ba::Ba;
use crate::error::ProtocolError;
use crate::rbc::Acast;
use crate::sim::{Context, Envelope, Label, Party, PartyFactory, PartyId, PartySet, Seg, SessionTag};

#[derive(Clone, Debug)]
pub struct Acs {
    session: SessionTag,
    k: usize,
    predicate: PartySet,
    bas: Vec<Ba>,
    inputs: Vec<Option<bool>>,
    decisions: Vec<Option<bool>>,
    ones: usize,
    output: Option<PartySet>,
    queue: Vec<(usize, bool)>,
}

impl Acs {
    pub fn new(session: SessionTag, n: usize, t: usize, k: usize) -> Self {
        let bas = (0..n).map(|j| Ba::new(session.child2(Label::Ba, j as u32), n, t)).collect();
        Acs {
            session,
            k,
            predicate: PartySet::empty(),
            bas,
            inputs: vec![None; n],
            decisions: vec![None; n],
            ones: 0,
            output: None,
            queue: Vec::new(),
        }
    }

    pub fn session(&self) -> &SessionTag {
        &self.session
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of instances decided 1 so far.
    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn predicate(&self) -> PartySet {
        self.predicate
    }

    pub fn ba_inputs(&self) -> &[Option<bool>] {
        &self.inputs
    }

    pub fn ba_outputs(&self) -> &[Option<bool>] {
        &self.decisions
    }

    pub fn ba(&self, j: usize) -> &Ba {
        &self.bas[j]
    }

    pub fn output(&self) -> Option<PartySet> {
        self.output
    }

    /// Records that `Q(j)` became 1. Returns `true` if the output was produced
    /// by this call.
    pub fn on_predicate(&mut self, ctx: &mut Context<'_>, j: PartyId) -> bool {
        if !self.predicate.insert(j) {
            return false;
        }
        ctx.note(&self.session, || format!("q j={}", j.0));
        if self.inputs[j.index()].is_none() {
            self.start_ba(ctx, j.index(), self.ones < self.k);
        }
        self.drain(ctx)
    }

    /// Handles a message for one of the nested agreement instances.
    pub fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<bool, ProtocolError> {
        let j = match env.session.strip(&self.session) {
            Some([Seg::Label(Label::Ba), Seg::Index(j), ..]) if (*j as usize) < self.bas.len() => *j as usize,
            _ => return Err(ProtocolError::UnknownSession),
        };
        if let Some(bit) = self.bas[j].on_message(ctx, env)? {
            self.queue.push((j, bit));
        }
        Ok(self.drain(ctx))
    }

    fn start_ba(&mut self, ctx: &mut Context<'_>, j: usize, input: bool) {
        self.inputs[j] = Some(input);
        ctx.note(&self.session, || format!("ba-input j={j} b={}", input as u8));
        if let Some(bit) = self.bas[j].start(ctx, input) {
            self.queue.push((j, bit));
        }
    }

    fn drain(&mut self, ctx: &mut Context<'_>) -> bool {
        let mut produced = false;
        while let Some((j, bit)) = self.queue.pop() {
            if self.decisions[j].is_some() {
                continue;
            }
            self.decisions[j] = Some(bit);
            if bit {
                self.ones += 1;
                if self.ones == self.k {
                    for i in 0..self.bas.len() {
                        if self.inputs[i].is_none() {
                            self.start_ba(ctx, i, false);
                        }
                    }
                }
            }
            if self.output.is_none() && self.decisions.iter().all(Option::is_some) {
                let set: PartySet =
                    (0..self.bas.len()).filter(|&i| self.decisions[i] == Some(true)).map(PartyId::new).collect();
                self.output = Some(set);
                ctx.note(&self.session, || format!("output={set:?}"));
                produced = true;
            }
        }
        produced
    }
}

/// Standalone CommonSubset over an A-Cast predicate: every party A-Casts one
/// byte under `acs/<id>/acast/<j>` and `Q(j)` turns 1 on delivery.
pub struct AcsParty {
    id: SessionTag,
    acasts: Vec<Acast>,
    acs: Acs,
    input: u8,
    output: Option<Vec<u32>>,
}

impl AcsParty {
    pub fn acs(&self) -> &Acs {
        &self.acs
    }

    fn record(&mut self, produced: bool) {
        if produced {
            self.output = self.acs.output().map(|s| s.iter().map(|p| p.0).collect());
        }
    }
}

impl Party for AcsParty {
    type Output = Vec<u32>;

    fn start(&mut self, ctx: &mut Context<'_>) {
        let me = ctx.me().index();
        let _ = self.acasts[me].send(ctx, &[self.input]);
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        let from = env.from.party().ok_or(ProtocolError::UnexpectedSender("F".into()))?;
        match env.session.strip(&self.id) {
            Some([Seg::Label(Label::Acast), Seg::Index(j)]) if (*j as usize) < self.acasts.len() => {
                let j = *j as usize;
                if self.acasts[j].on_message(ctx, from, &env.payload)? {
                    let produced = self.acs.on_predicate(ctx, PartyId::new(j));
                    self.record(produced);
                }
                Ok(())
            }
            Some([Seg::Label(Label::Acs), ..]) => {
                let produced = self.acs.on_message(ctx, env)?;
                self.record(produced);
                Ok(())
            }
            _ => Err(ProtocolError::UnknownSession),
        }
    }

    fn output(&self) -> Option<&Vec<u32>> {
        self.output.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct AcsFactory {
    pub n: usize,
    pub t: usize,
    /// Output-size threshold; `n - t` in every protocol that uses CommonSubset.
    pub k: usize,
    pub instance: u32,
}

impl AcsFactory {
    pub fn new(n: usize, t: usize) -> Self {
        AcsFactory { n, t, k: n - t, instance: 1 }
    }

    pub fn root(&self) -> SessionTag {
        SessionTag::root(Label::Acs).child(self.instance)
    }
}

impl PartyFactory for AcsFactory {
    type Party = AcsParty;

    fn build(&self, id: PartyId, flip_input: bool) -> AcsParty {
        let root = self.root();
        AcsParty {
            acasts: PartyId::all(self.n)
                .map(|j| Acast::new(root.child2(Label::Acast, j.0), j, self.n, self.t))
                .collect(),
            acs: Acs::new(root.child(Label::Acs), self.n, self.t, self.k),
            input: id.0 as u8 ^ flip_input as u8,
            id: root,
            output: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Endpoint;
    use rand::SeedableRng;

    fn with_ctx<R>(f: impl FnOnce(&mut Context<'_>) -> R) -> R {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut effects = Vec::new();
        let mut ctx = Context::new(Endpoint::Party(PartyId(0)), 4, 1, false, &mut rng, &mut effects);
        f(&mut ctx)
    }

    #[test]
    fn predicate_starts_instance_with_one_once() {
        let mut acs = Acs::new(SessionTag::root(Label::Acs), 4, 1, 3);
        with_ctx(|ctx| {
            acs.on_predicate(ctx, PartyId(2));
            acs.on_predicate(ctx, PartyId(2));
        });
        assert_eq!(acs.ba_inputs(), &[None, None, Some(true), None]);
        assert!(acs.ba(2).started());
    }

    #[test]
    fn reaching_k_starts_the_rest_with_zero() {
        let mut acs = Acs::new(SessionTag::root(Label::Acs), 4, 1, 3);
        with_ctx(|ctx| {
            for j in 0..3 {
                acs.queue.push((j, true));
            }
            acs.drain(ctx);
            assert_eq!(acs.ones(), 3);
            assert_eq!(acs.ba_inputs()[3], Some(false));
            acs.on_predicate(ctx, PartyId(3));
        });
        assert_eq!(acs.ba_inputs()[3], Some(false), "late predicate does not restart");
    }
}
