//! Deterministic discrete-event kernel: party hosting, scheduling, seeded
//! randomness and the run trace.

mod envelope;
mod ids;
mod kernel;
pub mod scheduler;
mod session;
pub mod trace;
pub mod wire;

pub use envelope::{Envelope, MAX_PAYLOAD};
pub use ids::{Endpoint, PartyId, PartySet, MAX_PARTIES};
pub use kernel::{
    party_rng, run_simulation, Context, Node, Party, PartyFactory, PartyOutcome, RunOptions, RunReport, SimConfig,
};
pub(crate) use kernel::Effect;
pub use scheduler::{Direction, Release, SchedulerSpec};
pub use session::{Label, Seg, SessionTag};
pub use trace::{write_jsonl, TraceKind, TraceMode, TraceRecord};
