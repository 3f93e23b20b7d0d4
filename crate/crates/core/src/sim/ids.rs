use std::fmt;

use serde::{Deserialize, Serialize};

/// Upper bound on the number of parties a run may host. Party sets are
/// stored as a single `u128` bitmask.
pub const MAX_PARTIES: usize = 128;

/// Index of a party in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub u32);

impl PartyId {
    pub fn new(index: usize) -> Self {
        debug_assert!(index < MAX_PARTIES);
        PartyId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Iterates over `P_0 .. P_{n-1}`.
    pub fn all(n: usize) -> impl Iterator<Item = PartyId> + Clone {
        (0..n).map(PartyId::new)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

/// Either a simulated party or the ideal SVSS functionality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Party(PartyId),
    Functionality,
}

impl Endpoint {
    pub fn party(self) -> Option<PartyId> {
        match self {
            Endpoint::Party(p) => Some(p),
            Endpoint::Functionality => None,
        }
    }
}

impl From<PartyId> for Endpoint {
    fn from(p: PartyId) -> Self {
        Endpoint::Party(p)
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Party(p) => p.fmt(f),
            Endpoint::Functionality => f.write_str("F"),
        }
    }
}

/// Small set of parties backed by a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PartySet(u128);

impl PartySet {
    pub const fn empty() -> Self {
        PartySet(0)
    }

    /// Returns `true` if `p` was not already present.
    pub fn insert(&mut self, p: PartyId) -> bool {
        let bit = 1u128 << p.0;
        let fresh = self.0 & bit == 0;
        self.0 |= bit;
        fresh
    }

    pub fn remove(&mut self, p: PartyId) -> bool {
        let bit = 1u128 << p.0;
        let present = self.0 & bit != 0;
        self.0 &= !bit;
        present
    }

    pub fn contains(&self, p: PartyId) -> bool {
        self.0 & (1u128 << p.0) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = PartyId> + '_ {
        let bits = self.0;
        (0..MAX_PARTIES as u32)
            .take_while(move |i| bits >> i != 0)
            .filter(move |i| bits & (1u128 << i) != 0)
            .map(PartyId)
    }
}

impl FromIterator<PartyId> for PartySet {
    fn from_iter<I: IntoIterator<Item = PartyId>>(iter: I) -> Self {
        let mut s = PartySet::empty();
        for p in iter {
            s.insert(p);
        }
        s
    }
}

impl fmt::Debug for PartySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|p| p.0)).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn party_set_insert_is_idempotent() {
        let mut s = PartySet::empty();
        assert!(s.insert(PartyId(3)));
        assert!(!s.insert(PartyId(3)));
        assert!(s.insert(PartyId(127)));
        assert_eq!(s.len(), 2);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![PartyId(3), PartyId(127)]);
        assert!(s.remove(PartyId(3)));
        assert!(!s.contains(PartyId(3)));
    }
}
