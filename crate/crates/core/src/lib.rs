//! Synthetic reproduction of measurement-induced quantum discord between two
//! qubits read out through a single, temporally mode-matched joint measurement.

pub mod analysis;
pub mod discord;
pub mod error;
pub mod experiment;
pub mod marginal;
pub mod measurement;
pub mod optimize;
pub mod pipeline;
pub mod pulse;
pub mod quantum;
pub mod sampling;
pub mod tomography;

pub use error::{Error, Result};
