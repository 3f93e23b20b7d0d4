//! The ε-biased strong common coin.
//!
//! Iteration `r` of `k`: every party shares a fresh random bit, CommonSubset
//! agrees on `S_r` among the completed sharings, every sharing in `S_r` is
//! reconstructed and the reductions mod 2 are XORed into `b'_r`. The majority
//! of the `k` results is fed to a final agreement whose output is the coin.
//!
//! Session layout under the coin root: `<r>/svss/<j>`, `<r>/acs/ba/<j>/...`
//! and `final-ba/...`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::acs::Acs;
use crate::analysis;
use crate::ba::Ba;
use crate::error::{ConfigError, ParamError, ProtocolError};
use crate::sim::{Context, Endpoint, Envelope, Label, Party, PartyFactory, PartyId, PartySet, Seg, SessionTag};
use crate::svss::{decode_response, encode_rec, encode_share, Response};

/// `k = 4 * ceil((e / (ε π))^2 * n^4)`, with the ceiling decided exactly.
pub fn coin_params(epsilon: &BigRational, n: usize) -> Result<u64, ParamError> {
    analysis::coin_k(epsilon, n as u64, analysis::precision_bits())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoinConfig {
    #[serde(serialize_with = "analysis::ser_ratio")]
    pub epsilon: BigRational,
    pub n: usize,
    pub t: usize,
    /// Iteration count from the formula.
    pub k: u64,
    /// Replaces `k` for desk-scale runs.
    pub k_override: Option<u64>,
}

impl CoinConfig {
    pub fn new(epsilon: BigRational, n: usize, t: usize) -> Result<Self, ConfigError> {
        if 3 * t + 1 > n {
            return Err(ConfigError::Resilience { n, t });
        }
        let k = coin_params(&epsilon, n)?;
        Ok(CoinConfig { epsilon, n, t, k, k_override: None })
    }

    /// A config whose iteration count is fixed to `k`, skipping the formula.
    pub fn reduced(n: usize, t: usize, k: u64) -> Self {
        CoinConfig {
            epsilon: BigRational::new(BigInt::from(1), BigInt::from(4)),
            n,
            t,
            k: 0,
            k_override: Some(k),
        }
    }

    pub fn with_k_override(mut self, k: u64) -> Self {
        self.k_override = Some(k);
        self
    }

    pub fn iterations(&self) -> u64 {
        self.k_override.unwrap_or(self.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CoinOutcome {
    pub majority_bit: bool,
    pub final_output: bool,
    /// Iterations whose XOR came out 1.
    pub ones_count: u64,
}

/// Majority with ties going to 0.
pub fn majority(ones: u64, k: u64) -> bool {
    2 * ones > k
}

#[derive(Clone, Debug)]
pub struct Iteration {
    pub r: u32,
    pub my_bit: bool,
    pub completed: PartySet,
    pub acs: Acs,
    pub subset: Option<PartySet>,
    pub rec_sent: bool,
    pub reconstructed: BTreeMap<u32, u64>,
    pub xor_result: Option<bool>,
}

impl Iteration {
    pub fn reduced(&self) -> BTreeMap<u32, bool> {
        self.reconstructed.iter().map(|(j, v)| (*j, v % 2 == 1)).collect()
    }
}

/// One party's coin instance.
#[derive(Clone, Debug)]
pub struct Coin {
    root: SessionTag,
    n: usize,
    t: usize,
    k: u64,
    flip: bool,
    iterations: Vec<Iteration>,
    buffered: Vec<Envelope>,
    ones: u64,
    script: Option<Vec<bool>>,
    final_ba: Ba,
    majority: Option<bool>,
    output: Option<bool>,
}

impl Coin {
    pub fn new(root: SessionTag, config: &CoinConfig, flip: bool) -> Self {
        let (n, t) = (config.n, config.t);
        Coin {
            final_ba: Ba::new(root.child(Label::FinalBa), n, t),
            root,
            n,
            t,
            k: config.iterations(),
            flip,
            iterations: Vec::new(),
            buffered: Vec::new(),
            ones: 0,
            script: None,
            majority: None,
            output: None,
        }
    }

    /// Skips the sub-protocols: `bits[r]` is taken as this party's `b'_r`.
    pub fn scripted(root: SessionTag, config: &CoinConfig, bits: Vec<bool>) -> Self {
        let mut c = Coin::new(root, config, false);
        c.script = Some(bits);
        c
    }

    pub fn root(&self) -> &SessionTag {
        &self.root
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn iterations(&self) -> &[Iteration] {
        &self.iterations
    }

    pub fn output(&self) -> Option<bool> {
        self.output
    }

    pub fn final_ba(&self) -> &Ba {
        &self.final_ba
    }

    pub fn outcome(&self) -> Option<CoinOutcome> {
        Some(CoinOutcome { majority_bit: self.majority?, final_output: self.output?, ones_count: self.ones })
    }

    /// Starts the coin. Returns the output if it was produced immediately.
    pub fn start(&mut self, ctx: &mut Context<'_>) -> Option<bool> {
        if let Some(bits) = self.script.take() {
            self.ones = bits.iter().filter(|b| **b).count() as u64;
            return self.finish(ctx);
        }
        if self.k == 0 {
            return self.finish(ctx);
        }
        self.start_iteration(ctx, 1)
    }

    fn start_iteration(&mut self, ctx: &mut Context<'_>, r: u32) -> Option<bool> {
        let tag = self.root.child(r);
        let my_bit = ctx.random_bit(&tag) ^ self.flip;
        let acs = Acs::new(tag.child(Label::Acs), self.n, self.t, self.n - self.t);
        self.iterations.push(Iteration {
            r,
            my_bit,
            completed: PartySet::empty(),
            acs,
            subset: None,
            rec_sent: false,
            reconstructed: BTreeMap::new(),
            xor_result: None,
        });
        ctx.to_functionality(&tag.child2(Label::Svss, ctx.me().0), encode_share(my_bit as u64));
        let (now, later): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.buffered).into_iter().partition(|e| self.iteration_of(e) == Some(r));
        self.buffered = later;
        let mut out = None;
        for env in now {
            if let Ok(Some(b)) = self.on_message(ctx, &env) {
                out = Some(b);
            }
        }
        out
    }

    fn iteration_of(&self, env: &Envelope) -> Option<u32> {
        match env.session.strip(&self.root) {
            Some([Seg::Index(r), ..]) => Some(*r),
            _ => None,
        }
    }

    /// Routes a message under this coin's root. Returns the coin output if
    /// this message produced it.
    pub fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<Option<bool>, ProtocolError> {
        let rest = env.session.strip(&self.root).ok_or(ProtocolError::UnknownSession)?;
        let r = match rest {
            [Seg::Label(Label::FinalBa), ..] => {
                return Ok(self.final_ba.on_message(ctx, env)?.and_then(|b| self.decided(ctx, b)));
            }
            [Seg::Index(r), ..] if *r >= 1 && u64::from(*r) <= self.k => *r,
            _ => return Err(ProtocolError::UnknownSession),
        };
        if r as usize > self.iterations.len() {
            self.buffered.push(env.clone());
            return Ok(None);
        }
        let idx = r as usize - 1;
        match &rest[1..] {
            [Seg::Label(Label::Svss), Seg::Index(j)] if (*j as usize) < self.n => {
                if env.from != Endpoint::Functionality {
                    return Err(ProtocolError::UnexpectedSender(env.from.to_string()));
                }
                let j = PartyId(*j);
                match decode_response(&env.payload)? {
                    Response::ShareDone => {
                        let it = &mut self.iterations[idx];
                        if it.completed.insert(j) && it.acs.on_predicate(ctx, j) {
                            it.subset = it.acs.output();
                        }
                    }
                    Response::RecOut(v) => {
                        let it = &mut self.iterations[idx];
                        if !it.rec_sent || !it.subset.is_some_and(|s| s.contains(j)) {
                            return Err(ProtocolError::Rejected("unrequested reconstruction"));
                        }
                        it.reconstructed.entry(j.0).or_insert(v);
                    }
                }
            }
            [Seg::Label(Label::Acs), ..] => {
                let it = &mut self.iterations[idx];
                if it.acs.on_message(ctx, env)? {
                    it.subset = it.acs.output();
                }
            }
            _ => return Err(ProtocolError::UnknownSession),
        }
        Ok(self.advance(ctx, idx))
    }

    fn advance(&mut self, ctx: &mut Context<'_>, idx: usize) -> Option<bool> {
        let it = &mut self.iterations[idx];
        let subset = it.subset?;
        if !it.rec_sent && subset.iter().all(|j| it.completed.contains(j)) {
            it.rec_sent = true;
            for j in subset.iter() {
                ctx.to_functionality(&self.root.child(it.r).child2(Label::Svss, j.0), encode_rec());
            }
        }
        if it.xor_result.is_some() || it.reconstructed.len() < subset.len() {
            return None;
        }
        let bit = it.reconstructed.values().fold(false, |acc, v| acc ^ (v % 2 == 1));
        it.xor_result = Some(bit);
        let r = it.r;
        ctx.note(&self.root, || format!("iteration={r} xor={}", bit as u8));
        self.ones += bit as u64;
        if u64::from(r) < self.k {
            self.start_iteration(ctx, r + 1)
        } else {
            self.finish(ctx)
        }
    }

    fn finish(&mut self, ctx: &mut Context<'_>) -> Option<bool> {
        let m = majority(self.ones, self.k);
        self.majority = Some(m);
        let ones = self.ones;
        ctx.note(&self.root, || format!("majority={} ones={ones}", m as u8));
        let b = self.final_ba.start(ctx, m)?;
        self.decided(ctx, b)
    }

    fn decided(&mut self, ctx: &mut Context<'_>, b: bool) -> Option<bool> {
        if self.output.is_some() {
            return None;
        }
        self.output = Some(b);
        ctx.note(&self.root, || format!("coin={}", b as u8));
        Some(b)
    }
}

pub struct CoinParty {
    coin: Coin,
}

impl CoinParty {
    pub fn coin(&self) -> &Coin {
        &self.coin
    }
}

impl Party for CoinParty {
    type Output = bool;

    fn start(&mut self, ctx: &mut Context<'_>) {
        self.coin.start(ctx);
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        self.coin.on_message(ctx, env).map(|_| ())
    }

    fn output(&self) -> Option<&bool> {
        self.coin.output.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct CoinFactory {
    pub config: CoinConfig,
    /// Per-party `b'_r` sequences; bypasses sharing and reconstruction.
    pub script: Option<Arc<Vec<Vec<bool>>>>,
}

impl CoinFactory {
    pub fn new(config: CoinConfig) -> Self {
        CoinFactory { config, script: None }
    }

    pub fn root() -> SessionTag {
        SessionTag::root(Label::Coin)
    }
}

impl PartyFactory for CoinFactory {
    type Party = CoinParty;

    fn build(&self, id: PartyId, flip_input: bool) -> CoinParty {
        let coin = match &self.script {
            Some(bits) => Coin::scripted(Self::root(), &self.config, bits[id.index()].clone()),
            None => Coin::new(Self::root(), &self.config, flip_input),
        };
        CoinParty { coin }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_ties_go_to_zero() {
        assert!(!majority(2, 4));
        assert!(majority(3, 4));
        assert!(!majority(0, 0));
    }
}
