//! Append-only run trace and its JSON-lines export.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ids::{Endpoint, PartySet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    Send,
    Deliver,
    LocalOutput,
    ProtocolComplete,
    Shun,
    RngDraw,
}

/// One simulation event. Field order is the JSON-lines column order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub kind: TraceKind,
    pub party: Option<u32>,
    pub session: String,
    pub detail: String,
    /// Message endpoints for send/deliver records, kept for view filtering.
    #[serde(skip)]
    pub endpoints: Option<(Endpoint, Endpoint)>,
}

impl TraceRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }

    /// What a static adversary corrupting `corrupted` observes of this record.
    ///
    /// The adversary schedules every message, so it sees all send/deliver
    /// metadata. Payloads are visible only on messages a corrupted party sends
    /// or receives. Party-local events are visible only for corrupted parties;
    /// shun events are public.
    pub fn adversary_view(&self, corrupted: &PartySet) -> Option<String> {
        let is_corrupt = |e: Endpoint| e.party().is_some_and(|p| corrupted.contains(p));
        match self.kind {
            TraceKind::Send | TraceKind::Deliver => {
                let (from, to) = self.endpoints?;
                let detail = if is_corrupt(from) || is_corrupt(to) {
                    self.detail.as_str()
                } else {
                    match self.detail.find(" payload=") {
                        Some(i) => &self.detail[..i],
                        None => self.detail.as_str(),
                    }
                };
                Some(format!("{}|{:?}|{}|{}", self.step, self.kind, self.session, detail))
            }
            TraceKind::Shun => Some(self.to_json_line()),
            _ => match self.party {
                Some(p) if corrupted.contains(super::ids::PartyId(p)) => Some(self.to_json_line()),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceMode {
    /// Nothing rendered; fastest.
    #[default]
    Off,
    /// Records are rendered and folded into a SHA-256 digest only.
    Hash,
    /// Records are kept in memory and hashed.
    Collect,
}

/// Trace accumulator owned by one run.
pub struct TraceSink {
    mode: TraceMode,
    next_step: u64,
    hasher: Option<Sha256>,
    records: Vec<TraceRecord>,
}

impl TraceSink {
    pub fn new(mode: TraceMode) -> Self {
        TraceSink {
            mode,
            next_step: 0,
            hasher: (mode != TraceMode::Off).then(Sha256::new),
            records: Vec::new(),
        }
    }

    pub fn enabled(&self) -> bool {
        self.mode != TraceMode::Off
    }

    /// Number of records emitted so far (also counts records in `Off` mode).
    pub fn steps(&self) -> u64 {
        self.next_step
    }

    pub fn push(
        &mut self,
        kind: TraceKind,
        party: Option<u32>,
        session: impl FnOnce() -> String,
        detail: impl FnOnce() -> String,
        endpoints: Option<(Endpoint, Endpoint)>,
    ) {
        let step = self.next_step;
        self.next_step += 1;
        if self.mode == TraceMode::Off {
            return;
        }
        let rec = TraceRecord { step, kind, party, session: session(), detail: detail(), endpoints };
        if let Some(h) = self.hasher.as_mut() {
            h.update(rec.to_json_line().as_bytes());
            h.update(b"\n");
        }
        if self.mode == TraceMode::Collect {
            self.records.push(rec);
        }
    }

    pub fn finish(self) -> (Vec<TraceRecord>, Option<String>) {
        let hash = self.hasher.map(|h| hex_digest(&h.finalize()));
        (self.records, hash)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes records as JSON lines with the fixed field order
/// `step, kind, party, session, detail`.
pub fn write_jsonl<W: Write>(mut w: W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        writeln!(w, "{}", r.to_json_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ids::PartyId;

    #[test]
    fn json_line_field_order_is_fixed() {
        let r = TraceRecord {
            step: 3,
            kind: TraceKind::RngDraw,
            party: None,
            session: "coin/1/svss/0".into(),
            detail: "bit=1".into(),
            endpoints: None,
        };
        assert_eq!(
            r.to_json_line(),
            r#"{"step":3,"kind":"rng-draw","party":null,"session":"coin/1/svss/0","detail":"bit=1"}"#
        );
    }

    #[test]
    fn honest_payloads_are_hidden_from_the_adversary() {
        let r = TraceRecord {
            step: 0,
            kind: TraceKind::Send,
            party: Some(0),
            session: "ba".into(),
            detail: "id=0 from=p0 to=p1 len=2 payload=0001".into(),
            endpoints: Some((Endpoint::Party(PartyId(0)), Endpoint::Party(PartyId(1)))),
        };
        let honest_only: PartySet = [PartyId(3)].into_iter().collect();
        assert!(!r.adversary_view(&honest_only).unwrap().contains("payload"));
        let sees: PartySet = [PartyId(1)].into_iter().collect();
        assert!(r.adversary_view(&sees).unwrap().contains("payload=0001"));
    }
}
