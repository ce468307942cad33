//! Desk-scale laboratory for mode selection in the cubic Schrödinger
//! equation with a trapping potential.
//!
//! The crate builds the full chain from a radial potential to a selection
//! verdict: discrete spectrum and continuum projectors, nonlinear
//! standing-wave branches, modulation coordinates splitting a field into
//! mode amplitudes and radiation, beat-frequency combinatorics, normal-form
//! cleanup of the energy, golden-rule damping coefficients, and both full
//! and reduced time integration.
//!
//! The numerical core is generic over the scalar type (see [`scalar::Real`]);
//! the concrete `f64` aliases below are what the CLI and most tests use.

pub mod error;
pub mod fixtures;
pub mod scalar;

pub mod grid;
pub mod linalg;

pub mod bound;
pub mod eigen;
pub mod operator;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

/// Concrete scalar used by the harness.
pub type F = f64;
/// Complex field over [`F`].
pub type C = Cplx<F>;

pub type Grid64 = grid::RadialGrid<F>;
pub type Operator64 = operator::DiscreteOperator<F>;
pub type EigenBasis64 = eigen::EigenBasis<F>;
