//! Exact arithmetic for integrality questions in local mirror symmetry.

pub mod error;
pub mod padic;
pub mod series;
pub mod congruence;
pub mod dwork;
pub mod geometry;
pub mod brane;
pub mod inversion;
pub mod cli;

pub use error::{Error, Result};
