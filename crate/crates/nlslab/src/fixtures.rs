//! Canonical scenario fixtures used by the test suite, the acceptance
//! harness and the CLI examples.

use crate::grid::{Potential, RadialGrid};
use crate::scalar::Real;

/// Two-mode fixture: a deep narrow Gaussian well plus a weak wide one,
/// concentric. Spectrum `e ≈ (-31.03, -8.55)`, so the doubled excited
/// frequency sits above the ground frequency and the beat `2e_2 - e_1 ≈ 13.9`
/// lands inside the continuum with a sizable damping coefficient.
pub fn two_mode_well() -> Potential {
    Potential::two_gaussian_wells(52.0, 0.85, 2.0, 1.4, 0.0)
}

/// Grid matched to [`two_mode_well`]: resolves the deep modes and the
/// radiated wave at the beat frequency.
pub fn two_mode_grid<R: Real>() -> RadialGrid<R> {
    RadialGrid::new(R::of(20.0), 900).expect("fixture grid")
}

/// Single-mode fixture: exactly one bound state.
pub fn single_mode_well() -> Potential {
    Potential::gaussian_well(4.0, 1.0)
}

pub fn single_mode_grid<R: Real>() -> RadialGrid<R> {
    RadialGrid::new(R::of(24.0), 700).expect("fixture grid")
}
