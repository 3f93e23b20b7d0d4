//! Canonical byte encodings shared by the protocol modules: LEB128 varints
//! and length-prefixed byte strings.

use crate::error::ProtocolError;

pub fn put_varint(buf: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf.push(byte);
            return;
        }
        buf.push(byte | 0x80);
    }
}

pub fn put_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    put_varint(buf, bytes.len() as u64);
    buf.extend_from_slice(bytes);
}

/// Cursor over a received payload.
pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf }
    }

    pub fn u8(&mut self) -> Result<u8, ProtocolError> {
        let (&b, rest) = self.buf.split_first().ok_or(ProtocolError::Truncated)?;
        self.buf = rest;
        Ok(b)
    }

    pub fn varint(&mut self) -> Result<u64, ProtocolError> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(ProtocolError::Malformed("varint overflow"))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], ProtocolError> {
        let len = self.varint()? as usize;
        if len > self.buf.len() {
            return Err(ProtocolError::Truncated);
        }
        let (head, rest) = self.buf.split_at(len);
        self.buf = rest;
        Ok(head)
    }

    /// Fails unless the whole payload has been consumed.
    pub fn finish(self) -> Result<(), ProtocolError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(ProtocolError::Malformed("trailing bytes"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn varint_and_bytes_roundtrip(v in any::<u64>(), data in proptest::collection::vec(any::<u8>(), 0..64)) {
            let mut buf = Vec::new();
            put_varint(&mut buf, v);
            put_bytes(&mut buf, &data);
            let mut r = Reader::new(&buf);
            prop_assert_eq!(r.varint().unwrap(), v);
            prop_assert_eq!(r.bytes().unwrap(), &data[..]);
            prop_assert!(r.finish().is_ok());
        }
    }

    #[test]
    fn truncated_length_prefix_is_rejected() {
        let mut r = Reader::new(&[5, 1, 2]);
        assert_eq!(r.bytes(), Err(ProtocolError::Truncated));
    }
}
