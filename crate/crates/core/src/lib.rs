//! One-dimensional potential scattering and the Levinson sum rule.
//!
//! The crate computes transmission and reflection amplitudes for both
//! incidence directions, assembles the 2×2 S-matrix, builds unwrapped phase
//! curves, evaluates the relative spectral density three independent ways,
//! and checks that the integrated density counts the bound states.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod export;
pub mod levinson;
pub mod potentials;
mod quad;
pub mod smatrix;
pub mod solver;
pub mod spectral;
pub mod spline;
pub mod suite;

pub use error::{Error, Result};
pub use potentials::{Potential, PotentialSpec, Shape};
pub use solver::{Channel, ScatteringSolution, SolverOptions};
