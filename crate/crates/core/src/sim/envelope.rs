use super::ids::Endpoint;
use super::session::SessionTag;

/// Largest payload the kernel will carry. Oversized sends are dropped and
/// traced.
pub const MAX_PAYLOAD: usize = 64 * 1024;

/// An in-flight message under scheduler control.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub msg_id: u64,
    pub from: Endpoint,
    pub to: Endpoint,
    pub session: SessionTag,
    pub payload: Vec<u8>,
}

impl Envelope {
    pub(crate) fn describe(&self) -> String {
        let mut s = format!(
            "id={} from={} to={} len={} payload=",
            self.msg_id,
            self.from,
            self.to,
            self.payload.len()
        );
        for b in &self.payload {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }
}
