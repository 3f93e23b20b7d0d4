//! Fair Byzantine Agreement: A-Cast every input, agree on a subset `S`, take
//! a strict-majority value of `S` if one exists, otherwise let FairChoice pick
//! an index of `S`.

use std::collections::BTreeMap;

use crate::acs::Acs;
use crate::error::{ConfigError, ParamError, ProtocolError};
use crate::rbc::{Acast, Value};
use crate::sim::{Context, Envelope, Label, Party, PartyFactory, PartyId, PartySet, Seg, SessionTag};

use super::choice::{coin_config, FairChoice};
use super::params::fair_choice_params;

/// The `k`'th biggest member of `set`, counting the biggest as 0.
pub fn kth_biggest(set: &PartySet, k: usize) -> Option<PartyId> {
    let members: Vec<PartyId> = set.iter().collect();
    members.len().checked_sub(k + 1).map(|i| members[i])
}

/// How the no-majority branch picks an index.
#[derive(Clone, Debug)]
pub enum ChoiceMode {
    /// Run FairChoice(|S|); coins use `k_override` iterations, or the
    /// formula's count when unset.
    Protocol { k_override: Option<u64> },
    /// Skip FairChoice and use this index (mod |S|).
    Stub(u64),
}

#[derive(Clone, Debug)]
pub struct Fba {
    root: SessionTag,
    n: usize,
    t: usize,
    mode: ChoiceMode,
    flip: bool,
    input: Vec<u8>,
    acasts: Vec<Acast>,
    acs: Acs,
    subset: Option<PartySet>,
    majority: Option<Vec<u8>>,
    choice: Option<FairChoice>,
    choice_k: Option<u64>,
    fc_buffer: Vec<Envelope>,
    output: Option<Value>,
}

impl Fba {
    pub fn new(root: SessionTag, n: usize, t: usize, input: Vec<u8>, mode: ChoiceMode, flip: bool) -> Self {
        Fba {
            acasts: PartyId::all(n).map(|j| Acast::new(root.child2(Label::Acast, j.0), j, n, t)).collect(),
            acs: Acs::new(root.child(Label::Acs), n, t, n - t),
            root,
            n,
            t,
            mode,
            flip,
            input,
            subset: None,
            majority: None,
            choice: None,
            choice_k: None,
            fc_buffer: Vec::new(),
            output: None,
        }
    }

    pub fn subset(&self) -> Option<PartySet> {
        self.subset
    }

    /// `|S|` once the subset is known.
    pub fn m(&self) -> Option<usize> {
        self.subset.map(|s| s.len())
    }

    pub fn majority_value(&self) -> Option<&[u8]> {
        self.majority.as_deref()
    }

    pub fn choice_k(&self) -> Option<u64> {
        self.choice_k
    }

    pub fn acast_outputs(&self) -> BTreeMap<u32, Vec<u8>> {
        self.acasts
            .iter()
            .filter_map(|a| a.output().map(|v| (a.sender().0, v.to_vec())))
            .collect()
    }

    pub fn acs(&self) -> &Acs {
        &self.acs
    }

    pub fn choice(&self) -> Option<&FairChoice> {
        self.choice.as_ref()
    }

    pub fn output(&self) -> Option<&Value> {
        self.output.as_ref()
    }

    pub fn start(&mut self, ctx: &mut Context<'_>) {
        let me = ctx.me().index();
        let input = self.input.clone();
        let _ = self.acasts[me].send(ctx, &input);
    }

    pub fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        match env.session.strip(&self.root) {
            Some([Seg::Label(Label::Acast), Seg::Index(j)]) if (*j as usize) < self.n => {
                let from = env.from.party().ok_or(ProtocolError::UnexpectedSender("F".into()))?;
                let j = *j as usize;
                if self.acasts[j].on_message(ctx, from, &env.payload)? && self.acs.on_predicate(ctx, PartyId::new(j)) {
                    self.subset = self.acs.output();
                }
            }
            Some([Seg::Label(Label::Acs), ..]) => {
                if self.acs.on_message(ctx, env)? {
                    self.subset = self.acs.output();
                }
            }
            Some([Seg::Label(Label::Fc), ..]) => match &mut self.choice {
                Some(fc) => {
                    if let Some(k) = fc.on_message(ctx, env)? {
                        self.chosen(ctx, k);
                    }
                }
                None if self.output.is_none() => self.fc_buffer.push(env.clone()),
                None => return Err(ProtocolError::Rejected("no choice running")),
            },
            _ => return Err(ProtocolError::UnknownSession),
        }
        self.try_decide(ctx);
        Ok(())
    }

    fn try_decide(&mut self, ctx: &mut Context<'_>) {
        let Some(s) = self.subset else { return };
        if self.output.is_some() || self.choice.is_some() || self.choice_k.is_some() {
            return;
        }
        let mut counts: BTreeMap<&[u8], usize> = BTreeMap::new();
        for j in s.iter() {
            match self.acasts[j.index()].output() {
                Some(v) => *counts.entry(v).or_default() += 1,
                None => return,
            }
        }
        let m = s.len();
        let majority = counts.into_iter().find(|(_, c)| 2 * c > m).map(|(v, _)| v.to_vec());
        if let Some(v) = majority {
            self.majority = Some(v.clone());
            ctx.note(&self.root, || format!("majority m={m}"));
            self.decide(ctx, v);
            return;
        }
        match self.mode {
            ChoiceMode::Stub(k) => self.chosen(ctx, k % m as u64),
            ChoiceMode::Protocol { k_override } => {
                let params = match fair_choice_params(m as u64) {
                    Ok(p) => p,
                    Err(_) => return,
                };
                let Ok(coin) = coin_config(&params, self.n, self.t, k_override) else { return };
                let mut fc = FairChoice::new(self.root.child(Label::Fc), params, coin, self.flip);
                let mut picked = fc.start(ctx);
                for env in std::mem::take(&mut self.fc_buffer) {
                    if let Ok(Some(k)) = fc.on_message(ctx, &env) {
                        picked = Some(k);
                    }
                }
                self.choice = Some(fc);
                if let Some(k) = picked {
                    self.chosen(ctx, k);
                }
            }
        }
    }

    fn chosen(&mut self, ctx: &mut Context<'_>, k: u64) {
        if self.choice_k.is_some() {
            return;
        }
        self.choice_k = Some(k);
        let s = self.subset.expect("choice runs after the subset is fixed");
        let j = kth_biggest(&s, k as usize).expect("choice lies in [0, m)");
        ctx.note(&self.root, || format!("choice k={k} index={}", j.0));
        let v = self.acasts[j.index()].output().expect("every member of S delivered").to_vec();
        self.decide(ctx, v);
    }

    fn decide(&mut self, ctx: &mut Context<'_>, v: Vec<u8>) {
        let v = Value(v);
        ctx.note(&self.root, || format!("output={v}"));
        self.output = Some(v);
    }
}

pub struct FbaParty {
    fba: Fba,
}

impl FbaParty {
    pub fn state(&self) -> &Fba {
        &self.fba
    }
}

impl Party for FbaParty {
    type Output = Value;

    fn start(&mut self, ctx: &mut Context<'_>) {
        self.fba.start(ctx);
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        self.fba.on_message(ctx, env)
    }

    fn output(&self) -> Option<&Value> {
        self.fba.output.as_ref()
    }
}

/// FBA under root `fba`. `inputs[i % len]` is party `i`'s input.
#[derive(Clone, Debug)]
pub struct FbaFactory {
    pub n: usize,
    pub t: usize,
    pub inputs: Vec<Vec<u8>>,
    pub mode: ChoiceMode,
}

impl FbaFactory {
    pub fn new(n: usize, t: usize, inputs: Vec<Vec<u8>>, mode: ChoiceMode) -> Result<Self, ConfigError> {
        if 3 * t + 1 > n {
            return Err(ConfigError::Resilience { n, t });
        }
        if n - t < 3 {
            return Err(ParamError::ChoiceSize(n - t).into());
        }
        if inputs.is_empty() {
            return Err(ConfigError::Other("fba needs at least one input".into()));
        }
        Ok(FbaFactory { n, t, inputs, mode })
    }

    pub fn root() -> SessionTag {
        SessionTag::root(Label::Fba)
    }
}

impl PartyFactory for FbaFactory {
    type Party = FbaParty;

    fn build(&self, id: PartyId, flip_input: bool) -> FbaParty {
        let mut input = self.inputs[id.index() % self.inputs.len()].clone();
        if flip_input {
            match input.last_mut() {
                Some(b) => *b ^= 1,
                None => input.push(1),
            }
        }
        FbaParty { fba: Fba::new(Self::root(), self.n, self.t, input, self.mode.clone(), flip_input) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn kth_biggest_matches_sort(bits in any::<u64>(), k in 0usize..70) {
            let set: PartySet = (0..64).filter(|i| bits >> i & 1 == 1).map(PartyId::new).collect();
            let mut sorted: Vec<PartyId> = set.iter().collect();
            sorted.sort_by(|a, b| b.cmp(a));
            prop_assert_eq!(kth_biggest(&set, k), sorted.get(k).copied());
        }
    }
}
