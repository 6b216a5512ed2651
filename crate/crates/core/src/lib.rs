//! Bias randomized benchmarking.
//!
//! Biased-noise channels, the CX-dihedral benchmarking protocol and its
//! interleaved variant, shot-level simulation, decay fitting and estimation
//! of dephasing and non-dephasing error probabilities.

pub mod analysis;
pub mod channels;
pub mod error;
pub mod experiment;
pub mod groups;
pub mod pauli;
pub mod protocols;
pub mod seeds;

pub use error::{Error, Result};
