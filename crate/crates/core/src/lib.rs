//! Eigenfunctions and proper p-harmonic functions on real Grassmannians,
//! flag manifolds and their non-compact duals, with exact symbolic and
//! jet-based numerical verification.

pub mod cli;
pub mod error;
pub mod functions;
pub mod group;
pub mod jets;
pub mod operators;
pub mod report;
pub mod symcalc;

pub use error::{Error, Result};
