//! Simulation core for two superconducting qubits coupled through a chain of
//! filter cavities: operators, model construction, pulse schedules, open-system
//! dynamics, spectral analysis and experiment drivers.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod model;
pub mod operator;
pub mod pulses;

pub use error::{Error, Result};
