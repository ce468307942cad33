//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by the numerical core.
///
/// Variants distinguish configuration mistakes (caller can fix the input)
/// from genuine numerical findings (near-degeneracy, chart exits, frequency
/// collisions) that the harness reports as scientific outcomes.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid, potential or solver configuration.
    #[error("configuration: {0}")]
    Config(String),

    /// Requested spectral point collides with the spectrum.
    #[error("spectrum collision: {0}")]
    SpectrumCollision(String),

    /// Eigenvalue gap below tolerance; the simple-spectrum assumption fails.
    #[error("near-degenerate eigenvalues: {0}")]
    Degeneracy(String),

    /// Iterative solver failed to converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Standing-wave continuation left its validity region.
    #[error("branch radius exceeded: last good amplitude {last_good}, {detail}")]
    BranchRadius { last_good: f64, detail: String },

    /// Requested amplitude lies outside the solved branch.
    #[error("amplitude {0} outside solved branch (max {1})")]
    OutOfBranch(f64, f64),

    /// Modulation coordinates are only defined on a small ball.
    #[error("coordinate chart exceeded: {0}")]
    ChartRadius(String),

    /// A frequency combination that must be nonzero fell below tolerance.
    #[error("nonresonance violation: mu={mu:?}, |mu.e|={value:.3e} < tau={tau:.3e}")]
    NonresonanceViolation { mu: Vec<i64>, value: f64, tau: f64 },

    /// A homological divisor fell below the frequency tolerance.
    #[error("small divisor {value:.3e} on channel {channel}")]
    SmallDivisor { channel: String, value: f64 },

    /// Out-of-domain argument (negative energy for a continuum query etc).
    #[error("domain: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
