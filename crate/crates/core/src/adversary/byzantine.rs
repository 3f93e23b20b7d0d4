use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Behavior;
use crate::sim::{Context, Effect, Endpoint, Envelope, Party, PartyId, SessionTag};
use crate::{rbc, svss};

/// Drives a corrupted party. Behaviors other than `silent` wrap the honest
/// state machine and rewrite what it sends.
pub struct ByzantineController<P> {
    id: PartyId,
    behavior: Behavior,
    inner: Option<P>,
    rng: ChaCha8Rng,
    attacked: BTreeSet<SessionTag>,
}

impl<P: Party> ByzantineController<P> {
    pub fn new(id: PartyId, behavior: Behavior, inner: Option<P>, rng: ChaCha8Rng) -> Self {
        ByzantineController { id, behavior, inner, rng, attacked: BTreeSet::new() }
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn behavior(&self) -> &Behavior {
        &self.behavior
    }

    /// The wrapped honest machine, if the behavior runs one.
    pub fn inner(&self) -> Option<&P> {
        self.inner.as_ref()
    }

    pub fn start(&mut self, ctx: &mut Context<'_>) {
        let mark = ctx.effects_len();
        if let Some(p) = self.inner.as_mut() {
            p.start(ctx);
        }
        self.rewrite(ctx, mark);
    }

    /// Handles one delivery; any effects the wrapped machine produced are
    /// rewritten according to the behavior.
    pub fn step(&mut self, ctx: &mut Context<'_>, env: &Envelope) {
        let mark = ctx.effects_len();
        if let Some(p) = self.inner.as_mut() {
            let _ = p.on_message(ctx, env);
        }
        self.rewrite(ctx, mark);
        if let Behavior::ValueBias { mode } = &self.behavior {
            if env.from == Endpoint::Functionality
                && svss::is_share_done(&env.payload)
                && self.attacked.insert(env.session.clone())
            {
                ctx.to_functionality(&env.session, svss::encode_failure(mode));
            }
        }
    }

    fn rewrite(&mut self, ctx: &mut Context<'_>, mark: usize) {
        match self.behavior {
            Behavior::Silent => ctx.truncate_effects(mark),
            Behavior::EchoHonest | Behavior::InputFlip | Behavior::ValueBias { .. } => {}
            Behavior::Equivocate => {
                let n = ctx.n();
                for e in ctx.effects_from(mark) {
                    if let Effect::Send { to, payload, .. } = e {
                        match to {
                            Endpoint::Party(q) if q.index() >= n / 2 => *payload = rbc::equivocate(payload),
                            Endpoint::Functionality => *payload = svss::corrupt_request(payload),
                            _ => {}
                        }
                    }
                }
            }
            Behavior::Garble => {
                let rng = &mut self.rng;
                for e in ctx.effects_from(mark) {
                    if let Effect::Send { payload, .. } = e {
                        let len = rng.gen_range(0..=payload.len() + 2);
                        *payload = (0..len).map(|_| rng.gen()).collect();
                    }
                }
            }
        }
    }
}
