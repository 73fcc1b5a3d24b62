//! Desk-scale simulation of witness-state synthesis, random-oracle views and
//! the counterfeiting adversary against oracle-aided public-key quantum money.

pub mod attack;
pub mod error;
pub mod harness;
pub mod hilbert;
pub mod jordan;
pub mod money;
pub mod oracle;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
pub use rng::RngStream;
