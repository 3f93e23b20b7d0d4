use std::collections::BTreeMap;

use super::{decode_response, encode_rec, encode_share, Response};
use crate::error::ProtocolError;
use crate::sim::{Context, Endpoint, Envelope, Label, Party, PartyFactory, PartyId, PartySet, Seg, SessionTag};

/// Standalone SVSS exercise: in each of `instances` rounds every party deals
/// one secret under `svss/<c>/<dealer>`, and reconstructs a session as soon
/// as `n - t` sharings of that round have completed.
pub struct SvssParty {
    n: usize,
    t: usize,
    instances: u32,
    secrets: Vec<u64>,
    completed: Vec<PartySet>,
    rec_started: Vec<PartySet>,
    values: BTreeMap<(u32, u32), u64>,
    output: Option<BTreeMap<String, u64>>,
}

impl SvssParty {
    pub fn session(c: u32, dealer: u32) -> SessionTag {
        SessionTag::root(Label::Svss).child2(c, dealer)
    }

    /// Reconstructed values keyed by `(instance, dealer)`.
    pub fn values(&self) -> &BTreeMap<(u32, u32), u64> {
        &self.values
    }

    fn rec_ready(&mut self, ctx: &mut Context<'_>, c: u32) {
        let ci = c as usize;
        if self.completed[ci].len() < self.n - self.t {
            return;
        }
        for d in self.completed[ci].iter() {
            if self.rec_started[ci].insert(d) {
                ctx.to_functionality(&Self::session(c, d.0), encode_rec());
            }
        }
    }
}

impl Party for SvssParty {
    type Output = BTreeMap<String, u64>;

    fn start(&mut self, ctx: &mut Context<'_>) {
        let me = ctx.me();
        for c in 0..self.instances {
            let tag = Self::session(c, me.0);
            let secret = match self.secrets.get(c as usize) {
                Some(s) => *s,
                None => ctx.random_bit(&tag) as u64,
            };
            ctx.to_functionality(&tag, encode_share(secret));
        }
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        if env.from != Endpoint::Functionality {
            return Err(ProtocolError::UnexpectedSender(env.from.to_string()));
        }
        let (c, d) = match env.session.segs() {
            [Seg::Label(Label::Svss), Seg::Index(c), Seg::Index(d)] if *c < self.instances && (*d as usize) < self.n => {
                (*c, *d)
            }
            _ => return Err(ProtocolError::UnknownSession),
        };
        match decode_response(&env.payload)? {
            Response::ShareDone => {
                if self.completed[c as usize].insert(PartyId(d)) {
                    if self.rec_started[c as usize].len() >= self.n - self.t {
                        self.rec_started[c as usize].insert(PartyId(d));
                        ctx.to_functionality(&env.session, encode_rec());
                    } else {
                        self.rec_ready(ctx, c);
                    }
                }
            }
            Response::RecOut(v) => {
                self.values.insert((c, d), v);
                ctx.note(&env.session, || format!("rec={v}"));
                let done = (0..self.instances).all(|c| {
                    self.values.range((c, 0)..(c + 1, 0)).count() >= self.n - self.t
                });
                if done && self.output.is_none() {
                    self.output = Some(self.values.iter().map(|((c, d), v)| (format!("svss/{c}/{d}"), *v)).collect());
                }
            }
        }
        Ok(())
    }

    fn output(&self) -> Option<&Self::Output> {
        self.output.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct SvssFactory {
    pub n: usize,
    pub t: usize,
    pub instances: u32,
    /// Per-instance secrets used by every dealer; random bits when empty.
    pub secrets: Vec<u64>,
}

impl PartyFactory for SvssFactory {
    type Party = SvssParty;

    fn build(&self, _: PartyId, flip_input: bool) -> SvssParty {
        let k = self.instances as usize;
        SvssParty {
            n: self.n,
            t: self.t,
            instances: self.instances,
            secrets: self.secrets.iter().map(|s| s ^ flip_input as u64).collect(),
            completed: vec![PartySet::empty(); k],
            rec_started: vec![PartySet::empty(); k],
            values: BTreeMap::new(),
            output: None,
        }
    }
}
