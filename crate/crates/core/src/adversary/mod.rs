//! Static Byzantine adversary: who is corrupted, how they behave, how
//! messages are scheduled and how many SVSS failures may be bought.

mod budget;
mod byzantine;

use serde::{Deserialize, Serialize};

pub use budget::{Accounting, FailureMode, ShunBudget, ShunEntry};
pub use byzantine::ByzantineController;

use crate::error::ConfigError;
use crate::sim::{PartyId, PartySet, SchedulerSpec, SimConfig};

/// Built-in behaviors for corrupted parties.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Behavior {
    /// Sends nothing, ever.
    Silent,
    /// Runs the honest code unchanged.
    EchoHonest,
    /// Honest code, but receivers in the upper half of the index range get a
    /// different value than the rest. Shared secrets become non-bits.
    Equivocate,
    /// Honest code on the opposite input.
    InputFlip,
    /// Honest code, plus a failure request to the SVSS functionality for every
    /// sharing it sees complete.
    ValueBias { mode: FailureMode },
    /// Honest control flow with random payload bytes.
    Garble,
}

impl Behavior {
    pub fn name(&self) -> &'static str {
        match self {
            Behavior::Silent => "silent",
            Behavior::EchoHonest => "echo-honest",
            Behavior::Equivocate => "equivocate",
            Behavior::InputFlip => "input-flip",
            Behavior::ValueBias { .. } => "value-bias",
            Behavior::Garble => "garble",
        }
    }

    pub fn runs_honest_code(&self) -> bool {
        !matches!(self, Behavior::Silent)
    }

    pub fn flips_input(&self) -> bool {
        matches!(self, Behavior::InputFlip)
    }

    /// One instance of each behavior, used by the fuzz matrix.
    pub fn catalogue() -> Vec<Behavior> {
        vec![
            Behavior::Silent,
            Behavior::EchoHonest,
            Behavior::Equivocate,
            Behavior::InputFlip,
            Behavior::ValueBias { mode: FailureMode::Disagree(vec![0, 1]) },
            Behavior::Garble,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    pub party: PartyId,
    pub behavior: Behavior,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSpec {
    /// Defaults to `n^2 - 1`.
    #[serde(default)]
    pub total: Option<u64>,
    #[serde(default)]
    pub accounting: Accounting,
}

impl BudgetSpec {
    pub fn build(&self, n: usize) -> Result<ShunBudget, ConfigError> {
        ShunBudget::new(n, self.total.unwrap_or((n * n) as u64 - 1), self.accounting)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryStrategy {
    #[serde(default)]
    pub corrupted: Vec<Corruption>,
    #[serde(default)]
    pub scheduler: SchedulerSpec,
    #[serde(default)]
    pub budget: BudgetSpec,
}

impl AdversaryStrategy {
    pub fn honest(scheduler: SchedulerSpec) -> Self {
        AdversaryStrategy { corrupted: Vec::new(), scheduler, budget: BudgetSpec::default() }
    }

    pub fn corrupt(mut self, party: PartyId, behavior: Behavior) -> Self {
        self.corrupted.push(Corruption { party, behavior });
        self
    }

    pub fn with_budget(mut self, total: u64, accounting: Accounting) -> Self {
        self.budget = BudgetSpec { total: Some(total), accounting };
        self
    }

    pub fn behavior_of(&self, p: PartyId) -> Option<&Behavior> {
        self.corrupted.iter().find(|c| c.party == p).map(|c| &c.behavior)
    }

    pub fn corrupted_set(&self, config: &SimConfig) -> Result<PartySet, ConfigError> {
        let mut set = PartySet::empty();
        for c in &self.corrupted {
            if c.party.index() >= config.n {
                return Err(ConfigError::PartyOutOfRange { index: c.party.index(), n: config.n });
            }
            if !set.insert(c.party) {
                return Err(ConfigError::Other(format!("party {} corrupted twice", c.party)));
            }
        }
        if set.len() > config.t {
            return Err(ConfigError::TooManyCorrupted { count: set.len(), t: config.t });
        }
        Ok(set)
    }

    /// Short label such as `equivocate@3/random`.
    pub fn label(&self) -> String {
        let who: Vec<String> =
            self.corrupted.iter().map(|c| format!("{}@{}", c.behavior.name(), c.party.0)).collect();
        let who = if who.is_empty() { "honest".to_string() } else { who.join("+") };
        format!("{who}/{}", self.scheduler.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_json_roundtrip() {
        let s = AdversaryStrategy::honest(SchedulerSpec::Fifo)
            .corrupt(PartyId(3), Behavior::ValueBias { mode: FailureMode::BiasToValue(3) })
            .with_budget(10, Accounting::PerPair);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<AdversaryStrategy>(&json).unwrap(), s);
        let parsed: AdversaryStrategy = serde_json::from_str(
            r#"{"corrupted":[{"party":1,"behavior":{"kind":"equivocate"}}],
                "scheduler":{"name":"targeted-delay","target":0,"release":{"after-deliveries":50}}}"#,
        )
        .unwrap();
        assert_eq!(parsed.behavior_of(PartyId(1)), Some(&Behavior::Equivocate));
        assert_eq!(parsed.budget.build(4).unwrap().total(), 15);
    }

    #[test]
    fn too_many_corruptions_rejected() {
        let cfg = SimConfig::new(4, 1, 0);
        let s = AdversaryStrategy::honest(SchedulerSpec::Fifo)
            .corrupt(PartyId(0), Behavior::Silent)
            .corrupt(PartyId(1), Behavior::Silent);
        assert_eq!(s.corrupted_set(&cfg), Err(ConfigError::TooManyCorrupted { count: 2, t: 1 }));
        let s = AdversaryStrategy::honest(SchedulerSpec::Fifo).corrupt(PartyId(9), Behavior::Silent);
        assert!(matches!(s.corrupted_set(&cfg), Err(ConfigError::PartyOutOfRange { .. })));
    }
}
