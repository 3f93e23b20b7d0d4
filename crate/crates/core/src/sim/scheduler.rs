//! Message schedulers. The asynchronous adversary decides which in-flight
//! envelope is delivered next; every built-in strategy still delivers each
//! envelope eventually.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::envelope::Envelope;
use super::ids::{Endpoint, PartyId};

/// Read-only kernel state a scheduler may condition on.
#[derive(Clone, Copy, Debug)]
pub struct SchedulerView {
    pub deliveries: u64,
    /// Nonfaulty parties that have produced their top-level output.
    pub completed: usize,
}

pub trait Scheduler {
    fn push(&mut self, env: Envelope);
    fn pop(&mut self, view: &SchedulerView) -> Option<Envelope>;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// When a targeted-delay scheduler stops holding messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Release {
    /// Held messages move only when nothing else is deliverable.
    Never,
    AfterDeliveries(u64),
    /// Once this many nonfaulty parties have output.
    AfterCompleted(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    From,
    To,
    Both,
}

/// Scheduler identifier plus parameters, as named in run configs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum SchedulerSpec {
    /// Delivery in send order.
    Fifo,
    /// Uniform choice among in-flight envelopes.
    #[default]
    Random,
    TargetedDelay {
        target: PartyId,
        #[serde(default)]
        direction: Direction,
        release: Release,
    },
}

impl SchedulerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SchedulerSpec::Fifo => "fifo",
            SchedulerSpec::Random => "random",
            SchedulerSpec::TargetedDelay { .. } => "targeted-delay",
        }
    }

    pub fn build(&self, rng: ChaCha8Rng) -> Box<dyn Scheduler> {
        match *self {
            SchedulerSpec::Fifo => Box::new(FifoScheduler::default()),
            SchedulerSpec::Random => Box::new(RandomScheduler::new(rng)),
            SchedulerSpec::TargetedDelay { target, direction, release } => {
                Box::new(TargetedDelayScheduler::new(target, direction, release, rng))
            }
        }
    }
}

#[derive(Default)]
pub struct FifoScheduler {
    queue: VecDeque<Envelope>,
}

impl Scheduler for FifoScheduler {
    fn push(&mut self, env: Envelope) {
        self.queue.push_back(env);
    }

    fn pop(&mut self, _: &SchedulerView) -> Option<Envelope> {
        self.queue.pop_front()
    }

    fn len(&self) -> usize {
        self.queue.len()
    }
}

pub struct RandomScheduler {
    pool: Vec<Envelope>,
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(rng: ChaCha8Rng) -> Self {
        RandomScheduler { pool: Vec::new(), rng }
    }
}

impl Scheduler for RandomScheduler {
    fn push(&mut self, env: Envelope) {
        self.pool.push(env);
    }

    fn pop(&mut self, _: &SchedulerView) -> Option<Envelope> {
        if self.pool.is_empty() {
            return None;
        }
        let i = self.rng.gen_range(0..self.pool.len());
        Some(self.pool.swap_remove(i))
    }

    fn len(&self) -> usize {
        self.pool.len()
    }
}

/// Holds one party's traffic until a release condition fires, ordering the
/// rest uniformly at random.
pub struct TargetedDelayScheduler {
    target: PartyId,
    direction: Direction,
    release: Release,
    released: bool,
    held: VecDeque<Envelope>,
    rest: RandomScheduler,
}

impl TargetedDelayScheduler {
    pub fn new(target: PartyId, direction: Direction, release: Release, rng: ChaCha8Rng) -> Self {
        TargetedDelayScheduler {
            target,
            direction,
            release,
            released: false,
            held: VecDeque::new(),
            rest: RandomScheduler::new(rng),
        }
    }

    fn holds(&self, env: &Envelope) -> bool {
        let t = Endpoint::Party(self.target);
        match self.direction {
            Direction::From => env.from == t,
            Direction::To => env.to == t,
            Direction::Both => env.from == t || env.to == t,
        }
    }
}

impl Scheduler for TargetedDelayScheduler {
    fn push(&mut self, env: Envelope) {
        if !self.released && self.holds(&env) {
            self.held.push_back(env);
        } else {
            self.rest.push(env);
        }
    }

    fn pop(&mut self, view: &SchedulerView) -> Option<Envelope> {
        if !self.released {
            let fire = match self.release {
                Release::Never => false,
                Release::AfterDeliveries(d) => view.deliveries >= d,
                Release::AfterCompleted(c) => view.completed >= c,
            };
            if fire {
                self.released = true;
                for env in self.held.drain(..) {
                    self.rest.push(env);
                }
            }
        }
        match self.rest.pop(view) {
            Some(env) => Some(env),
            None => self.held.pop_front(),
        }
    }

    fn len(&self) -> usize {
        self.held.len() + self.rest.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::session::{Label, SessionTag};
    use rand::SeedableRng;

    fn env(id: u64, from: u32) -> Envelope {
        Envelope {
            msg_id: id,
            from: Endpoint::Party(PartyId(from)),
            to: Endpoint::Party(PartyId(0)),
            session: SessionTag::root(Label::Ba),
            payload: vec![],
        }
    }

    const VIEW: SchedulerView = SchedulerView { deliveries: 0, completed: 0 };

    #[test]
    fn fifo_preserves_send_order() {
        let mut s = FifoScheduler::default();
        for i in 0..5 {
            s.push(env(i, 1));
        }
        let ids: Vec<_> = std::iter::from_fn(|| s.pop(&VIEW)).map(|e| e.msg_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn targeted_delay_releases_held_messages_when_idle() {
        let mut s = TargetedDelayScheduler::new(
            PartyId(2),
            Direction::From,
            Release::Never,
            ChaCha8Rng::seed_from_u64(1),
        );
        s.push(env(0, 2));
        s.push(env(1, 1));
        s.push(env(2, 3));
        let ids: Vec<_> = std::iter::from_fn(|| s.pop(&VIEW)).map(|e| e.msg_id).collect();
        assert_eq!(ids.len(), 3);
        assert_eq!(ids[2], 0, "held message goes last");
    }

    #[test]
    fn targeted_delay_stops_holding_after_release() {
        let mut s = TargetedDelayScheduler::new(
            PartyId(2),
            Direction::From,
            Release::AfterDeliveries(1),
            ChaCha8Rng::seed_from_u64(1),
        );
        s.push(env(0, 2));
        let later = SchedulerView { deliveries: 1, completed: 0 };
        assert_eq!(s.pop(&later).map(|e| e.msg_id), Some(0));
    }
}
