//! Classical-readout quantum PUF laboratory.
//!
//! The crate simulates a noisy multi-qubit device as independent imperfect
//! qubits ([`blochsim`]), turns finite shot batches into statistical-query
//! responses ([`sqlayer`]), runs the Hadamard CR-QPUF challenge/response
//! protocol ([`pufproto`]), and implements the polynomial-regression
//! modelling attack that forges responses without the device ([`attack`]).
//! [`harness`] wires everything into reproducible experiments.

pub mod attack;
pub mod blochsim;
pub mod error;
pub mod harness;
pub mod pufproto;
pub mod rng;
pub mod sqlayer;

pub use error::{Error, Result};
