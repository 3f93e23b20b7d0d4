use crate::coin::{Coin, CoinConfig};
use crate::error::{ConfigError, ProtocolError};
use crate::sim::{Context, Envelope, Label, Party, PartyFactory, PartyId, Seg, SessionTag};

use super::params::{fair_choice_params, FairChoiceParams};

/// `r mod m` where `r` has binary digits `bits`, most significant first.
pub fn assemble(bits: &[bool], m: u64) -> u64 {
    let r = bits.iter().fold(0u128, |acc, b| (acc << 1) | *b as u128);
    (r % m as u128) as u64
}

pub(crate) fn coin_config(
    params: &FairChoiceParams,
    n: usize,
    t: usize,
    k_override: Option<u64>,
) -> Result<CoinConfig, ConfigError> {
    let coin = CoinConfig::new(params.epsilon.clone(), n, t)?;
    Ok(match k_override {
        Some(k) => coin.with_k_override(k),
        None => coin,
    })
}

/// FairChoice(m): `l` sequential coins under `<root>/coin/<i>`, `i = 1..=l`.
#[derive(Clone, Debug)]
pub struct FairChoice {
    root: SessionTag,
    params: FairChoiceParams,
    config: CoinConfig,
    flip: bool,
    coins: Vec<Coin>,
    bits: Vec<bool>,
    buffered: Vec<Envelope>,
    output: Option<u64>,
}

impl FairChoice {
    /// `config` supplies `n`, `t` and the iteration count; its ε should be
    /// `params.epsilon` unless `k_override` is set.
    pub fn new(root: SessionTag, params: FairChoiceParams, config: CoinConfig, flip: bool) -> Self {
        FairChoice { root, params, config, flip, coins: Vec::new(), bits: Vec::new(), buffered: Vec::new(), output: None }
    }

    pub fn params(&self) -> &FairChoiceParams {
        &self.params
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn coins(&self) -> &[Coin] {
        &self.coins
    }

    pub fn output(&self) -> Option<u64> {
        self.output
    }

    pub fn start(&mut self, ctx: &mut Context<'_>) -> Option<u64> {
        self.start_coin(ctx, 1)
    }

    fn start_coin(&mut self, ctx: &mut Context<'_>, i: u32) -> Option<u64> {
        let mut coin = Coin::new(self.root.child2(Label::Coin, i), &self.config, self.flip);
        let first = coin.start(ctx);
        self.coins.push(coin);
        if let Some(b) = first {
            return self.coin_output(ctx, b);
        }
        let (now, later): (Vec<_>, Vec<_>) =
            std::mem::take(&mut self.buffered).into_iter().partition(|e| self.coin_of(e) == Some(i));
        self.buffered = later;
        let mut out = None;
        for env in now {
            if let Ok(Some(v)) = self.on_message(ctx, &env) {
                out = Some(v);
            }
        }
        out
    }

    fn coin_of(&self, env: &Envelope) -> Option<u32> {
        match env.session.strip(&self.root) {
            Some([Seg::Label(Label::Coin), Seg::Index(i), ..]) => Some(*i),
            _ => None,
        }
    }

    pub fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<Option<u64>, ProtocolError> {
        let i = match self.coin_of(env) {
            Some(i) if i >= 1 && i <= self.params.l => i,
            _ => return Err(ProtocolError::UnknownSession),
        };
        if i as usize > self.coins.len() {
            self.buffered.push(env.clone());
            return Ok(None);
        }
        match self.coins[i as usize - 1].on_message(ctx, env)? {
            Some(b) => Ok(self.coin_output(ctx, b)),
            None => Ok(None),
        }
    }

    fn coin_output(&mut self, ctx: &mut Context<'_>, b: bool) -> Option<u64> {
        self.bits.push(b);
        if self.bits.len() < self.params.l as usize {
            return self.start_coin(ctx, self.bits.len() as u32 + 1);
        }
        let v = assemble(&self.bits, self.params.m);
        self.output = Some(v);
        ctx.note(&self.root, || format!("choice={v}"));
        Some(v)
    }
}

pub struct FairChoiceParty {
    fc: FairChoice,
}

impl FairChoiceParty {
    pub fn state(&self) -> &FairChoice {
        &self.fc
    }
}

impl Party for FairChoiceParty {
    type Output = u64;

    fn start(&mut self, ctx: &mut Context<'_>) {
        self.fc.start(ctx);
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        self.fc.on_message(ctx, env).map(|_| ())
    }

    fn output(&self) -> Option<&u64> {
        self.fc.output.as_ref()
    }
}

/// Standalone FairChoice under root `fc`.
#[derive(Clone, Debug)]
pub struct FairChoiceFactory {
    pub params: FairChoiceParams,
    pub coin: CoinConfig,
}

impl FairChoiceFactory {
    /// Without `k_override` each coin runs the formula's iteration count at
    /// FairChoice's ε, which is far beyond simulation scale for any `n`.
    pub fn new(n: usize, t: usize, m: u64, k_override: Option<u64>) -> Result<Self, ConfigError> {
        let params = fair_choice_params(m)?;
        let coin = coin_config(&params, n, t, k_override)?;
        Ok(FairChoiceFactory { params, coin })
    }

    pub fn root() -> SessionTag {
        SessionTag::root(Label::Fc)
    }
}

impl PartyFactory for FairChoiceFactory {
    type Party = FairChoiceParty;

    fn build(&self, _id: PartyId, flip_input: bool) -> FairChoiceParty {
        FairChoiceParty { fc: FairChoice::new(Self::root(), self.params.clone(), self.coin.clone(), flip_input) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn place_value() {
        assert_eq!(assemble(&[false; 5], 3), 0);
        assert_eq!(assemble(&[false, false, false, true, true], 3), 0);
        assert_eq!(assemble(&[true, false, false, false, false], 3), 16 % 3);
        assert_eq!(assemble(&[true; 6], 5), 63 % 5);
    }
}
