//! The (1+1)-EA on the TwoLin dynamic benchmark.
//!
//! TwoLin draws, every generation, one of two linear functions that weight the
//! left `floor(ell * n)` bits and the remaining bits with `n` and `1` (or the
//! other way round). Near the optimum the zero-bit counts `(x_L, x_R)` of the
//! left and right part follow a linear drift `A x / n` with a 2x2 matrix `A`;
//! the sign of `a * gamma0 + b` decides whether the EA is efficient.
//!
//! Modules:
//! - [`drift_matrix`]: the matrix, its eigen-decomposition and the classifier.
//! - [`twolin`]: bit strings, the two fitness functions and selection.
//! - [`ea`]: the (1+1)-EA with standard bit mutation.
//! - [`exact_drift`]: exact one-step drifts, oracles and the domination check.
//! - [`potential`]: the eigenbasis potential and trajectory diagnostics.
//! - [`experiments`]: parameter sweeps and threshold estimation.
//! - [`verify`]: invariant suites used by the CLI.
//!
//! The closed-form analysis is generic over the scalar type (any
//! [`num_traits::Float`]); the `f64` aliases below are what the simulation and
//! exact-drift code use.

pub mod binomial;
pub mod drift_matrix;
pub mod ea;
pub mod error;
pub mod exact_drift;
pub mod experiments;
pub mod params;
pub mod potential;
pub mod scalar;
pub mod stats;
pub mod twolin;
pub mod verify;

pub use error::{Error, Result};
pub use params::Params;
pub use scalar::Real;
pub use twolin::{BitString, Environment, State};

/// Drift matrix in double precision.
pub type Matrix = drift_matrix::DriftMatrix<f64>;
/// Eigen-decomposition in double precision.
pub type Eigen = drift_matrix::EigenSystem<f64>;
/// Eigenbasis potential in double precision.
pub type Pot = potential::Potential<f64>;

/// Drift matrix in single precision.
pub type MatrixF32 = drift_matrix::DriftMatrix<f32>;
/// Eigen-decomposition in single precision.
pub type EigenF32 = drift_matrix::EigenSystem<f32>;
