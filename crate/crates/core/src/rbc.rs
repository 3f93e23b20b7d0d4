//! A-Cast: Bracha's echo/ready reliable broadcast.
//!
//! Wire format: one tag byte (`INITIAL`, `ECHO`, `READY`) followed by the
//! length-prefixed value.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::ProtocolError;
use crate::sim::wire::{put_bytes, Reader};
use crate::sim::{Context, Envelope, Label, Party, PartyFactory, PartyId, PartySet, SessionTag};

pub const INITIAL: u8 = 0;
pub const ECHO: u8 = 1;
pub const READY: u8 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Thresholds {
    /// Matching echoes that trigger a ready: `ceil((n+t+1)/2)`.
    pub echo: usize,
    /// Matching readies that trigger a ready: `t+1`.
    pub amplify: usize,
    /// Matching readies that trigger delivery: `2t+1`.
    pub deliver: usize,
}

impl Thresholds {
    pub fn new(n: usize, t: usize) -> Self {
        Thresholds { echo: (n + t + 2) / 2, amplify: t + 1, deliver: 2 * t + 1 }
    }
}

pub fn encode(tag: u8, value: &[u8]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(value.len() + 2);
    buf.push(tag);
    put_bytes(&mut buf, value);
    buf
}

pub fn decode(payload: &[u8]) -> Result<(u8, &[u8]), ProtocolError> {
    let mut r = Reader::new(payload);
    let tag = r.u8()?;
    if tag > READY {
        return Err(ProtocolError::Malformed("a-cast tag"));
    }
    let value = r.bytes()?;
    r.finish()?;
    Ok((tag, value))
}

/// Rewrites an A-Cast payload to carry a different value of the same kind.
/// Anything that does not parse gets its first byte flipped instead.
pub fn equivocate(payload: &[u8]) -> Vec<u8> {
    match decode(payload) {
        Ok((tag, value)) => {
            let mut v = value.to_vec();
            match v.last_mut() {
                Some(b) => *b ^= 1,
                None => v.push(1),
            }
            encode(tag, &v)
        }
        Err(_) => {
            let mut p = payload.to_vec();
            match p.first_mut() {
                Some(b) => *b ^= 1,
                None => p.push(0),
            }
            p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Idle,
    SentInitial,
    Echoed,
    Readied,
    Delivered,
}

#[derive(Clone, Debug, Default)]
struct Tally {
    from: PartySet,
    counts: Vec<(Vec<u8>, usize)>,
}

impl Tally {
    /// Counts `value` from `p`; returns the new count, or `None` for a repeat.
    fn add(&mut self, p: PartyId, value: &[u8]) -> Option<usize> {
        if !self.from.insert(p) {
            return None;
        }
        if let Some((_, c)) = self.counts.iter_mut().find(|(v, _)| v == value) {
            *c += 1;
            return Some(*c);
        }
        self.counts.push((value.to_vec(), 1));
        Some(1)
    }

    fn count(&self, value: &[u8]) -> usize {
        self.counts.iter().find(|(v, _)| v == value).map_or(0, |(_, c)| *c)
    }
}

/// One A-Cast instance as seen by one party.
#[derive(Clone, Debug)]
pub struct Acast {
    session: SessionTag,
    sender: PartyId,
    thresholds: Thresholds,
    phase: Phase,
    initial_seen: bool,
    echoed: bool,
    readied: bool,
    echoes: Tally,
    readies: Tally,
    output: Option<Vec<u8>>,
}

impl Acast {
    pub fn new(session: SessionTag, sender: PartyId, n: usize, t: usize) -> Self {
        Acast {
            session,
            sender,
            thresholds: Thresholds::new(n, t),
            phase: Phase::Idle,
            initial_seen: false,
            echoed: false,
            readied: false,
            echoes: Tally::default(),
            readies: Tally::default(),
            output: None,
        }
    }

    pub fn session(&self) -> &SessionTag {
        &self.session
    }

    pub fn sender(&self) -> PartyId {
        self.sender
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn output(&self) -> Option<&[u8]> {
        self.output.as_deref()
    }

    pub fn echo_count(&self, value: &[u8]) -> usize {
        self.echoes.count(value)
    }

    pub fn ready_count(&self, value: &[u8]) -> usize {
        self.readies.count(value)
    }

    fn advance(&mut self, to: Phase) {
        self.phase = self.phase.max(to);
    }

    /// Sends the initial message. Only the designated sender may call this, once.
    pub fn send(&mut self, ctx: &mut Context<'_>, value: &[u8]) -> Result<(), ProtocolError> {
        if ctx.me() != self.sender || self.phase != Phase::Idle {
            ctx.note(&self.session, || "a-cast double send rejected".into());
            return Err(ProtocolError::DoubleSend);
        }
        ctx.broadcast(&self.session, &encode(INITIAL, value));
        self.advance(Phase::SentInitial);
        Ok(())
    }

    /// Handles one message; returns `true` when this call delivered the value.
    pub fn on_message(&mut self, ctx: &mut Context<'_>, from: PartyId, payload: &[u8]) -> Result<bool, ProtocolError> {
        let (tag, value) = decode(payload)?;
        match tag {
            INITIAL => {
                if from != self.sender {
                    return Err(ProtocolError::UnexpectedSender(from.to_string()));
                }
                if self.initial_seen {
                    return Ok(false);
                }
                self.initial_seen = true;
                if !self.echoed {
                    self.echoed = true;
                    ctx.broadcast(&self.session, &encode(ECHO, value));
                    self.advance(Phase::Echoed);
                }
            }
            ECHO => {
                if let Some(c) = self.echoes.add(from, value) {
                    if c >= self.thresholds.echo {
                        self.ready(ctx, value);
                    }
                }
            }
            _ => {
                if let Some(c) = self.readies.add(from, value) {
                    if c >= self.thresholds.amplify {
                        self.ready(ctx, value);
                    }
                    if c >= self.thresholds.deliver && self.output.is_none() {
                        self.output = Some(value.to_vec());
                        self.advance(Phase::Delivered);
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    fn ready(&mut self, ctx: &mut Context<'_>, value: &[u8]) {
        if !self.readied {
            self.readied = true;
            ctx.broadcast(&self.session, &encode(READY, value));
            self.advance(Phase::Readied);
        }
    }
}

/// Opaque byte value, rendered as hex in reports.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Value(pub Vec<u8>);

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Value({self})")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Standalone A-Cast participant under session `acast/<sender>`.
pub struct AcastParty {
    inst: Acast,
    input: Option<Vec<u8>>,
    output: Option<Value>,
}

impl AcastParty {
    pub fn state(&self) -> &Acast {
        &self.inst
    }
}

impl Party for AcastParty {
    type Output = Value;

    fn start(&mut self, ctx: &mut Context<'_>) {
        if let Some(v) = self.input.take() {
            let _ = self.inst.send(ctx, &v);
        }
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, env: &Envelope) -> Result<(), ProtocolError> {
        if env.session != self.inst.session {
            return Err(ProtocolError::UnknownSession);
        }
        let from = env.from.party().ok_or(ProtocolError::UnexpectedSender("F".into()))?;
        if self.inst.on_message(ctx, from, &env.payload)? {
            self.output = self.inst.output().map(|v| Value(v.to_vec()));
        }
        Ok(())
    }

    fn output(&self) -> Option<&Value> {
        self.output.as_ref()
    }
}

#[derive(Clone, Debug)]
pub struct AcastFactory {
    pub n: usize,
    pub t: usize,
    pub sender: PartyId,
    pub value: Vec<u8>,
}

impl AcastFactory {
    pub fn session(&self) -> SessionTag {
        SessionTag::root(Label::Acast).child(self.sender.0)
    }
}

impl PartyFactory for AcastFactory {
    type Party = AcastParty;

    fn build(&self, id: PartyId, flip_input: bool) -> AcastParty {
        let input = (id == self.sender).then(|| {
            let mut v = self.value.clone();
            if flip_input {
                v = equivocate(&encode(INITIAL, &v));
                v = decode(&v).map(|(_, x)| x.to_vec()).unwrap_or_default();
            }
            v
        });
        AcastParty { inst: Acast::new(self.session(), self.sender, self.n, self.t), input, output: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Effect, Endpoint};
    use rand::SeedableRng;

    #[test]
    fn thresholds_at_n4() {
        assert_eq!(Thresholds::new(4, 1), Thresholds { echo: 3, amplify: 2, deliver: 3 });
        assert_eq!(Thresholds::new(7, 2), Thresholds { echo: 5, amplify: 3, deliver: 5 });
        assert_eq!(Thresholds::new(5, 1).echo, 4);
    }

    #[test]
    fn equivocation_changes_value_only() {
        let p = encode(ECHO, b"01");
        let q = equivocate(&p);
        let (tag, v) = decode(&q).unwrap();
        assert_eq!(tag, ECHO);
        assert_eq!(v, b"00");
    }

    #[test]
    fn malformed_payloads_rejected() {
        assert!(decode(&[]).is_err());
        assert!(decode(&[7, 0]).is_err());
        assert!(decode(&[ECHO, 3, 1]).is_err());
        assert!(decode(&[ECHO, 0, 9]).is_err());
    }

    fn step(a: &mut Acast, from: u32, payload: &[u8]) -> (bool, Vec<Effect>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut effects = Vec::new();
        let mut ctx = Context::new(Endpoint::Party(PartyId(1)), 4, 1, false, &mut rng, &mut effects);
        let d = a.on_message(&mut ctx, PartyId(from), payload).unwrap();
        (d, effects)
    }

    #[test]
    fn duplicate_echo_counts_once() {
        let mut a = Acast::new(SessionTag::root(Label::Acast), PartyId(0), 4, 1);
        step(&mut a, 2, &encode(ECHO, b"v"));
        step(&mut a, 2, &encode(ECHO, b"v"));
        assert_eq!(a.echo_count(b"v"), 1);
        assert_eq!(a.phase(), Phase::Idle);
    }

    #[test]
    fn delivery_needs_three_readies_at_n4() {
        let mut a = Acast::new(SessionTag::root(Label::Acast), PartyId(0), 4, 1);
        assert!(!step(&mut a, 0, &encode(READY, b"v")).0);
        let (_, effects) = step(&mut a, 2, &encode(READY, b"v"));
        assert_eq!(effects.len(), 4, "t+1 readies trigger a ready broadcast");
        assert_eq!(a.phase(), Phase::Readied);
        assert!(step(&mut a, 3, &encode(READY, b"v")).0);
        assert_eq!(a.output(), Some(&b"v"[..]));
        assert!(!step(&mut a, 1, &encode(READY, b"v")).0);
    }
}
