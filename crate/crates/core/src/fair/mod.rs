//! FairChoice and Fair Byzantine Agreement.

mod choice;
mod fba;
mod params;

pub use choice::{assemble, FairChoice, FairChoiceFactory, FairChoiceParty};
pub use fba::{kth_biggest, ChoiceMode, Fba, FbaFactory, FbaParty};
pub use params::{fair_choice_params, FairChoiceParams, EPSILON_BITS};
