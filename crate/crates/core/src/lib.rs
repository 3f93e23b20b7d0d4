//! A deterministic simulation lab for asynchronous Byzantine agreement with a
//! strong common coin and fair validity.
//!
//! Protocols are event-driven state machines run by [`sim::run_simulation`]
//! under an adversarial scheduler; [`analysis`] checks the probability bounds
//! the protocols rely on with exact or interval arithmetic.

pub mod acs;
pub mod adversary;
pub mod analysis;
pub mod ba;
pub mod cli;
pub mod coin;
pub mod error;
pub mod fair;
pub mod rbc;
pub mod scenario;
pub mod sim;
pub mod svss;

pub use error::{ConfigError, ParamError, ProtocolError};
