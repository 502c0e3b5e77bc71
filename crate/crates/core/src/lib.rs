//! Föppl–von Kármán plates with residual growth strain.
//!
//! The crate minimizes the two-dimensional growth energy over in-plane and
//! out-of-plane displacements, checks equilibrium through an Airy stress
//! potential, and compares against full three-dimensional thin-plate
//! energies evaluated on an explicit recovery ansatz.

// `!(x > 0.0)` is used on purpose so NaN is rejected with the negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airy;
pub mod cli;
pub mod energy2d;
pub mod error;
pub mod fields;
pub mod growth;
pub mod material;
pub mod optim;
pub mod plate3d;
pub mod solver2d;
mod sparse;

pub use error::{Error, Result};
