//! Analysis toolkit for two-user uplink asynchronous NOMA (ANOMA).
//!
//! The crate evaluates the sum throughput of an uplink in which User 2's
//! symbols are deliberately offset by a fraction `tau` of a symbol from User
//! 1's, and the base station takes two matched-filter samples per symbol.
//!
//! * [`model`]: parameter types and the structured matrices of the sampled model.
//! * [`throughput`]: log-det, closed-form and recursion routes, limits, baselines.
//! * [`timing`]: exact and first-order throughput loss under timing errors.
//! * [`design`]: full-power check and optimal timing-mismatch search.
//! * [`waveform`]: continuous-time matched-filter simulator and noise Monte Carlo.
//! * [`cli`]: figure sweeps to CSV, validation suites and point queries.

pub mod band;
pub mod error;
pub mod model;
pub mod throughput;
pub mod timing;
pub mod design;
pub mod waveform;
pub mod cli;

pub use error::{Error, Result};
