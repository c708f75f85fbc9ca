//! Quantum reservoir simulation for learning tomography of temporal quantum maps.
//!
//! A spin-network reservoir is driven by a stream of input density matrices; a
//! linear readout on measured observables reconstructs the output states of a
//! target temporal map. Diagnostics cover memory capacity, superoperator spectra
//! and metastability of the reduced dynamics.

pub mod error;
pub mod qcore;
pub mod reservoir;
pub mod channels;
pub mod readout;
pub mod metrics;
pub mod spectral;
pub mod experiment;

pub use error::{Error, Result};
