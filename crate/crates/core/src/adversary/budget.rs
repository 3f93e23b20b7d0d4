use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::sim::{PartyId, PartySet, SessionTag};

/// How an SVSS session misbehaves once the adversary has paid for a failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureMode {
    /// Every nonfaulty reconstruction yields this field element.
    BiasToValue(u64),
    /// Party `i` reconstructs `values[i % values.len()]`.
    Disagree(Vec<u64>),
}

impl FailureMode {
    pub fn value_for(&self, party: PartyId) -> u64 {
        match self {
            FailureMode::BiasToValue(v) => *v,
            FailureMode::Disagree(vs) if vs.is_empty() => 0,
            FailureMode::Disagree(vs) => vs[party.index() % vs.len()],
        }
    }
}

/// Whether shun events are counted globally or once per (shunner, shunned) pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accounting {
    #[default]
    Global,
    PerPair,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShunEntry {
    pub session: String,
    pub mode: FailureMode,
    pub shunner: Option<PartyId>,
    pub shunned: Option<PartyId>,
}

/// The adversary's allowance of SVSS binding failures for one run.
///
/// `total < n^2` always holds, and `consumed` only grows. Each grant appends
/// exactly one log entry; the SVSS functionality emits the matching shun
/// trace record.
#[derive(Clone, Debug)]
pub struct ShunBudget {
    total: u64,
    consumed: u64,
    accounting: Accounting,
    log: Vec<ShunEntry>,
    pairs: BTreeSet<(PartyId, PartyId)>,
}

impl ShunBudget {
    pub fn new(n: usize, total: u64, accounting: Accounting) -> Result<Self, ConfigError> {
        let limit = (n * n) as u64;
        if total >= limit {
            return Err(ConfigError::BudgetTooLarge { total, limit });
        }
        Ok(ShunBudget { total, consumed: 0, accounting, log: Vec::new(), pairs: BTreeSet::new() })
    }

    /// The largest budget allowed: `n^2 - 1`.
    pub fn maximal(n: usize) -> Self {
        ShunBudget::new(n, (n * n) as u64 - 1, Accounting::Global).expect("n^2 - 1 < n^2")
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn remaining(&self) -> u64 {
        self.total - self.consumed
    }

    pub fn accounting(&self) -> Accounting {
        self.accounting
    }

    pub fn log(&self) -> &[ShunEntry] {
        &self.log
    }

    /// Grants a failure for `session` iff budget remains.
    pub fn try_consume_failure(&mut self, session: &SessionTag, mode: &FailureMode) -> bool {
        if self.consumed >= self.total {
            return false;
        }
        self.consumed += 1;
        self.log.push(ShunEntry { session: session.to_string(), mode: mode.clone(), shunner: None, shunned: None });
        true
    }

    /// Like [`try_consume_failure`](Self::try_consume_failure), attributing the
    /// event to faulty `shunned`. Under per-pair accounting, a grant also needs
    /// a nonfaulty party that has not yet shunned `shunned`.
    pub fn try_consume_failure_by(
        &mut self,
        session: &SessionTag,
        mode: &FailureMode,
        shunned: PartyId,
        nonfaulty: &PartySet,
    ) -> bool {
        if self.consumed >= self.total {
            return false;
        }
        let shunner = match self.accounting {
            Accounting::Global => nonfaulty.iter().next(),
            Accounting::PerPair => {
                match nonfaulty.iter().find(|&i| !self.pairs.contains(&(i, shunned))) {
                    Some(i) => {
                        self.pairs.insert((i, shunned));
                        Some(i)
                    }
                    None => return false,
                }
            }
        };
        self.consumed += 1;
        self.log.push(ShunEntry {
            session: session.to_string(),
            mode: mode.clone(),
            shunner,
            shunned: Some(shunned),
        });
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Label;

    fn session(c: u32, d: u32) -> SessionTag {
        SessionTag::root(Label::Svss).child2(c, d)
    }

    #[test]
    fn exhausted_budget_refuses() {
        let mut b = ShunBudget::new(4, 15, Accounting::Global).unwrap();
        for c in 0..15 {
            assert!(b.try_consume_failure(&session(c, 0), &FailureMode::BiasToValue(1)));
        }
        assert_eq!(b.consumed(), 15);
        assert!(!b.try_consume_failure(&session(99, 0), &FailureMode::BiasToValue(1)));
        assert_eq!(b.consumed(), 15);
        assert_eq!(b.log().len(), 15);
    }

    #[test]
    fn first_consumption_logs_one_entry() {
        let mut b = ShunBudget::new(4, 15, Accounting::Global).unwrap();
        assert!(b.try_consume_failure(&session(2, 1), &FailureMode::BiasToValue(3)));
        assert_eq!(b.consumed(), 1);
        assert_eq!(b.log().len(), 1);
        assert_eq!(b.log()[0].session, "svss/2/1");
    }

    #[test]
    fn total_must_stay_below_n_squared() {
        assert!(matches!(
            ShunBudget::new(4, 16, Accounting::Global),
            Err(ConfigError::BudgetTooLarge { total: 16, limit: 16 })
        ));
        assert_eq!(ShunBudget::maximal(4).total(), 15);
    }

    #[test]
    fn per_pair_accounting_charges_each_pair_once() {
        let mut b = ShunBudget::new(4, 15, Accounting::PerPair).unwrap();
        let honest: PartySet = PartyId::all(3).collect();
        let mut grants = 0;
        for c in 0..10 {
            if b.try_consume_failure_by(&session(c, 3), &FailureMode::BiasToValue(0), PartyId(3), &honest) {
                grants += 1;
            }
        }
        assert_eq!(grants, 3, "three honest parties can each shun p3 once");
    }
}
