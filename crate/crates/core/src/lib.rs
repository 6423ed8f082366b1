//! Lattice decoding and space-time coding toolkit for MIMO Rayleigh fading
//! channels.
//!
//! The crate compares exact maximum-likelihood decoding with naive lattice
//! decoding (closest point of the infinite received lattice, out-of-region
//! decisions counted as errors) and its LLL-aided Babai approximation, and
//! provides the Monte Carlo estimators and closed-form reference curves used
//! to study short vectors of random lattices.

pub mod analysis;
pub mod channel;
pub mod decoders;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod stcodes;

pub use error::{Error, Result};
