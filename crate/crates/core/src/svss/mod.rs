//! Ideal shunning VSS functionality.
//!
//! Parties talk to the functionality with small requests under the session's
//! tag; the dealer is the tag's last index segment. Binding can only fail when
//! a corrupted party buys a failure from the [`ShunBudget`].
//!
//! Requests: `SHARE` + varint secret, `REC`, `FAIL` + mode byte + varint list.
//! Responses: `SHARE_DONE`, `REC_OUT` + varint value.

mod hiding;
mod party;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use hiding::{adversary_view_before_rec, hiding_probe};
pub use party::{SvssFactory, SvssParty};

use crate::adversary::{FailureMode, ShunBudget};
use crate::error::ProtocolError;
use crate::sim::wire::{put_varint, Reader};
use crate::sim::{Context, Endpoint, Envelope, PartyId, PartySet, SessionTag};

pub const SHARE: u8 = 0;
pub const REC: u8 = 1;
pub const FAIL: u8 = 2;
pub const SHARE_DONE: u8 = 0x10;
pub const REC_OUT: u8 = 0x11;

pub const DEFAULT_MODULUS: u64 = 5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Request {
    Share(u64),
    Rec,
    Fail(FailureMode),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Response {
    ShareDone,
    RecOut(u64),
}

pub fn encode_share(secret: u64) -> Vec<u8> {
    let mut b = vec![SHARE];
    put_varint(&mut b, secret);
    b
}

pub fn encode_rec() -> Vec<u8> {
    vec![REC]
}

pub fn encode_failure(mode: &FailureMode) -> Vec<u8> {
    let mut b = vec![FAIL];
    match mode {
        FailureMode::BiasToValue(v) => {
            b.push(0);
            put_varint(&mut b, *v);
        }
        FailureMode::Disagree(vs) => {
            b.push(1);
            put_varint(&mut b, vs.len() as u64);
            for v in vs {
                put_varint(&mut b, *v);
            }
        }
    }
    b
}

pub fn decode_request(payload: &[u8]) -> Result<Request, ProtocolError> {
    let mut r = Reader::new(payload);
    let req = match r.u8()? {
        SHARE => Request::Share(r.varint()?),
        REC => Request::Rec,
        FAIL => match r.u8()? {
            0 => Request::Fail(FailureMode::BiasToValue(r.varint()?)),
            1 => {
                let len = r.varint()?;
                if len > 128 {
                    return Err(ProtocolError::Malformed("failure value list"));
                }
                let vs = (0..len).map(|_| r.varint()).collect::<Result<_, _>>()?;
                Request::Fail(FailureMode::Disagree(vs))
            }
            _ => return Err(ProtocolError::Malformed("failure mode")),
        },
        _ => return Err(ProtocolError::Malformed("svss request")),
    };
    r.finish()?;
    Ok(req)
}

pub fn encode_response(resp: Response) -> Vec<u8> {
    match resp {
        Response::ShareDone => vec![SHARE_DONE],
        Response::RecOut(v) => {
            let mut b = vec![REC_OUT];
            put_varint(&mut b, v);
            b
        }
    }
}

pub fn decode_response(payload: &[u8]) -> Result<Response, ProtocolError> {
    let mut r = Reader::new(payload);
    let resp = match r.u8()? {
        SHARE_DONE => Response::ShareDone,
        REC_OUT => Response::RecOut(r.varint()?),
        _ => return Err(ProtocolError::Malformed("svss response")),
    };
    r.finish()?;
    Ok(resp)
}

pub(crate) fn is_share_done(payload: &[u8]) -> bool {
    payload == [SHARE_DONE]
}

/// Turns a share request into one for a value that is not a bit.
pub(crate) fn corrupt_request(payload: &[u8]) -> Vec<u8> {
    match decode_request(payload) {
        Ok(Request::Share(s)) => encode_share(s + 2),
        _ => payload.to_vec(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvssOptions {
    /// Field modulus, a prime above 2.
    pub modulus: u64,
    /// Refuse failure requests on sessions whose dealer is nonfaulty.
    pub strict: bool,
    /// Replace the dealer's secret in one session; used by the hiding probe.
    #[serde(skip)]
    pub secret_override: Option<(SessionTag, u64)>,
}

impl Default for SvssOptions {
    fn default() -> Self {
        SvssOptions { modulus: DEFAULT_MODULUS, strict: false, secret_override: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvssSession {
    pub id: SessionTag,
    pub dealer: PartyId,
    pub secret: u64,
    /// Fixed when sharing completes; equals `secret` in the ideal functionality.
    pub bound_value: u64,
    pub share_completed: PartySet,
    pub rec_invoked: PartySet,
    pub rec_output: BTreeMap<PartyId, u64>,
    /// Granted failure and the functionality request index at which it was granted.
    pub failure: Option<(FailureMode, u64)>,
    held_recs: Vec<PartyId>,
}

impl SvssSession {
    /// Binding-or-shun: nonfaulty outputs all equal the bound value, or a
    /// failure was paid for.
    pub fn binding_holds(&self, corrupted: &PartySet) -> bool {
        self.failure.is_some()
            || self.rec_output.iter().all(|(p, v)| corrupted.contains(*p) || *v == self.bound_value)
    }
}

#[derive(Clone, Debug, Default)]
pub struct SvssFunctionality {
    options: SvssOptions,
    sessions: BTreeMap<SessionTag, SvssSession>,
    requests: u64,
    rejected: u64,
}

impl SvssFunctionality {
    pub fn new(options: SvssOptions) -> Self {
        SvssFunctionality { options, ..Default::default() }
    }

    pub fn sessions(&self) -> &BTreeMap<SessionTag, SvssSession> {
        &self.sessions
    }

    pub fn session(&self, tag: &SessionTag) -> Option<&SvssSession> {
        self.sessions.get(tag)
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub(crate) fn on_message(
        &mut self,
        ctx: &mut Context<'_>,
        env: &Envelope,
        corrupted: &PartySet,
        budget: &mut ShunBudget,
    ) -> Result<(), ProtocolError> {
        self.requests += 1;
        let res = self.handle(ctx, env, corrupted, budget);
        if res.is_err() {
            self.rejected += 1;
        }
        res
    }

    fn handle(
        &mut self,
        ctx: &mut Context<'_>,
        env: &Envelope,
        corrupted: &PartySet,
        budget: &mut ShunBudget,
    ) -> Result<(), ProtocolError> {
        let caller = env.from.party().ok_or(ProtocolError::UnexpectedSender("F".into()))?;
        let dealer = env.session.last_index().ok_or(ProtocolError::UnknownSession)?;
        if dealer as usize >= ctx.n() {
            return Err(ProtocolError::UnknownSession);
        }
        let p = self.options.modulus;
        match decode_request(&env.payload)? {
            Request::Share(secret) => {
                if caller.0 != dealer {
                    return Err(ProtocolError::Rejected("share from non-dealer"));
                }
                if self.sessions.contains_key(&env.session) {
                    return Err(ProtocolError::Rejected("double share"));
                }
                let secret = match &self.options.secret_override {
                    Some((tag, s)) if *tag == env.session => *s,
                    _ => secret,
                } % p;
                let all: PartySet = PartyId::all(ctx.n()).collect();
                self.sessions.insert(
                    env.session.clone(),
                    SvssSession {
                        id: env.session.clone(),
                        dealer: caller,
                        secret,
                        bound_value: secret,
                        share_completed: all,
                        rec_invoked: PartySet::empty(),
                        rec_output: BTreeMap::new(),
                        failure: None,
                        held_recs: Vec::new(),
                    },
                );
                ctx.note(&env.session, || format!("share-accepted dealer={caller}"));
                for q in PartyId::all(ctx.n()) {
                    ctx.send(q, &env.session, encode_response(Response::ShareDone));
                }
            }
            Request::Rec => {
                let s = self.sessions.get_mut(&env.session).ok_or(ProtocolError::Rejected("rec before share"))?;
                if !s.rec_invoked.insert(caller) {
                    return Ok(());
                }
                if corrupted.contains(caller) {
                    if s.rec_invoked.iter().all(|q| corrupted.contains(q)) {
                        s.held_recs.push(caller);
                        return Ok(());
                    }
                    Self::answer(ctx, s, caller, p);
                } else {
                    let held = std::mem::take(&mut s.held_recs);
                    Self::answer(ctx, s, caller, p);
                    for q in held {
                        Self::answer(ctx, s, q, p);
                    }
                }
            }
            Request::Fail(mode) => {
                if !corrupted.contains(caller) {
                    return Err(ProtocolError::Rejected("failure request from nonfaulty party"));
                }
                let s = self.sessions.get_mut(&env.session).ok_or(ProtocolError::Rejected("failure before share"))?;
                if s.failure.is_some() {
                    return Ok(());
                }
                if self.options.strict && !corrupted.contains(s.dealer) {
                    ctx.note(&env.session, || "failure refused: nonfaulty dealer".into());
                    return Ok(());
                }
                if s.rec_output.keys().any(|q| !corrupted.contains(*q)) {
                    ctx.note(&env.session, || "failure refused: already reconstructed".into());
                    return Ok(());
                }
                let nonfaulty: PartySet = PartyId::all(ctx.n()).filter(|q| !corrupted.contains(*q)).collect();
                if budget.try_consume_failure_by(&env.session, &mode, caller, &nonfaulty) {
                    let entry = budget.log().last().expect("grant logs an entry");
                    let shunner = entry.shunner.map_or("-".to_string(), |q| q.to_string());
                    ctx.shun(&env.session, format!("shunner={shunner} shunned={caller} mode={mode:?}"));
                    s.failure = Some((mode, self.requests));
                } else {
                    ctx.note(&env.session, || "failure refused: budget".into());
                }
            }
        }
        Ok(())
    }

    fn answer(ctx: &mut Context<'_>, s: &mut SvssSession, to: PartyId, p: u64) {
        let v = match &s.failure {
            Some((mode, _)) => mode.value_for(to) % p,
            None => s.bound_value,
        };
        s.rec_output.insert(to, v);
        ctx.send(Endpoint::Party(to), &s.id, encode_response(Response::RecOut(v)));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn request_roundtrip() {
        for req in [
            Request::Share(3),
            Request::Rec,
            Request::Fail(FailureMode::BiasToValue(3)),
            Request::Fail(FailureMode::Disagree(vec![0, 1, 4])),
        ] {
            let bytes = match &req {
                Request::Share(s) => encode_share(*s),
                Request::Rec => encode_rec(),
                Request::Fail(m) => encode_failure(m),
            };
            assert_eq!(decode_request(&bytes).unwrap(), req);
        }
        assert_eq!(decode_response(&encode_response(Response::RecOut(4))).unwrap(), Response::RecOut(4));
        assert_eq!(decode_request(&corrupt_request(&encode_share(1))).unwrap(), Request::Share(3));
    }

    proptest! {
        #[test]
        fn arbitrary_bytes_never_panic(data in proptest::collection::vec(any::<u8>(), 0..32)) {
            let _ = decode_request(&data);
            let _ = decode_response(&data);
        }
    }
}
