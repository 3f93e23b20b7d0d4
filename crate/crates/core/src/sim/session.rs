use std::fmt;

use smallvec::SmallVec;

/// Fixed protocol labels used inside session tags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Acast,
    Ba,
    Acs,
    Svss,
    Coin,
    FinalBa,
    Fba,
    Fc,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Acast => "acast",
            Label::Ba => "ba",
            Label::Acs => "acs",
            Label::Svss => "svss",
            Label::Coin => "coin",
            Label::FinalBa => "final-ba",
            Label::Fba => "fba",
            Label::Fc => "fc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Seg {
    Label(Label),
    Index(u32),
}

impl fmt::Display for Seg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seg::Label(l) => f.write_str(l.as_str()),
            Seg::Index(i) => write!(f, "{i}"),
        }
    }
}

impl From<Label> for Seg {
    fn from(l: Label) -> Self {
        Seg::Label(l)
    }
}

impl From<u32> for Seg {
    fn from(i: u32) -> Self {
        Seg::Index(i)
    }
}

/// Hierarchical protocol-instance identifier, rendered as `a/b/c`.
///
/// Every protocol instance owns a prefix; children extend it. A message is
/// routed by stripping the receiving instance's prefix and matching the
/// remaining segments.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SessionTag(SmallVec<[Seg; 12]>);

impl SessionTag {
    pub fn root(label: Label) -> Self {
        let mut v = SmallVec::new();
        v.push(Seg::Label(label));
        SessionTag(v)
    }

    pub fn from_segs(segs: &[Seg]) -> Self {
        SessionTag(SmallVec::from_slice(segs))
    }

    pub fn child(&self, seg: impl Into<Seg>) -> Self {
        let mut v = self.0.clone();
        v.push(seg.into());
        SessionTag(v)
    }

    pub fn child2(&self, a: impl Into<Seg>, b: impl Into<Seg>) -> Self {
        let mut v = self.0.clone();
        v.push(a.into());
        v.push(b.into());
        SessionTag(v)
    }

    pub fn segs(&self) -> &[Seg] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Segments following `prefix`, or `None` if `self` is not under it.
    pub fn strip<'a>(&'a self, prefix: &SessionTag) -> Option<&'a [Seg]> {
        self.0.strip_prefix(prefix.0.as_slice())
    }

    pub fn last_index(&self) -> Option<u32> {
        match self.0.last() {
            Some(Seg::Index(i)) => Some(*i),
            _ => None,
        }
    }
}

impl fmt::Display for SessionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            s.fmt(f)?;
        }
        Ok(())
    }
}

impl fmt::Debug for SessionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SessionTag({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_nested_tags() {
        let coin = SessionTag::root(Label::Fba).child(Label::Fc).child2(Label::Coin, 2);
        let svss = coin.child(3).child2(Label::Svss, 1);
        assert_eq!(svss.to_string(), "fba/fc/coin/2/3/svss/1");
        assert_eq!(svss.strip(&coin), Some(&[Seg::Index(3), Seg::Label(Label::Svss), Seg::Index(1)][..]));
        assert_eq!(svss.last_index(), Some(1));
        assert!(coin.strip(&svss).is_none());
    }
}
