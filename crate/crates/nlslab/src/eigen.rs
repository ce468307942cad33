//! Bound-state eigenbasis of the discrete operator and the projector onto
//! its orthogonal complement.

use crate::error::{Error, Result};
use crate::grid::dot_real;
use crate::linalg::{bisect_eigenvalues, inverse_iteration};
use crate::operator::DiscreteOperator;
use crate::scalar::{Cplx, Real};

/// Negative-energy eigenpairs of `H`, ascending, orthonormal, real.
#[derive(Debug, Clone)]
pub struct EigenBasis<R: Real> {
    pub eigenvalues: Vec<R>,
    pub eigenfunctions: Vec<Vec<R>>,
    /// Quadrature weight of the grid the basis lives on.
    h: R,
}

/// Relative eigenvalue gap below which the simple-spectrum assumption is
/// declared violated.
pub fn default_gap_tol<R: Real>() -> R {
    R::of(1e-6)
}

/// Compute all bound states below zero energy (up to `max_states`).
pub fn eigenbasis<R: Real>(
    op: &DiscreteOperator<R>,
    max_states: usize,
    gap_tol_rel: R,
) -> Result<EigenBasis<R>> {
    let a = op.matrix();
    let h = op.grid().spacing();
    let below_zero = a.count_below(R::zero());
    let count = below_zero.min(max_states);
    if count == 0 {
        return Ok(EigenBasis {
            eigenvalues: vec![],
            eigenfunctions: vec![],
            h,
        });
    }
    let (lo, hi) = a.gershgorin();
    let tol = (hi - lo) * R::epsilon() * R::of(4.0);
    let values = bisect_eigenvalues(a, count, tol);
    // Simplicity check relative to the deepest level.
    let scale = values[0].abs().max(R::min_positive_value());
    for w in values.windows(2) {
        if (w[1] - w[0]).abs() < gap_tol_rel * scale {
            return Err(Error::Degeneracy(format!(
                "gap {:.3e} below {:.1e}·|e_1|",
                (w[1] - w[0]).abs().to_f64_lossy(),
                gap_tol_rel.to_f64_lossy()
            )));
        }
    }
    let mut vectors: Vec<Vec<R>> = Vec::with_capacity(count);
    for (idx, &lam) in values.iter().enumerate() {
        let (_, v) = inverse_iteration(a, lam, h, &vectors).ok_or_else(|| {
            Error::Convergence(format!("inverse iteration failed at level {idx}"))
        })?;
        vectors.push(v);
    }
    // Bound states decay at the edge; a fat tail signals a too-small domain.
    for (idx, v) in vectors.iter().enumerate() {
        let tail = v[v.len() - 1].abs();
        let peak = v.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
        if tail > R::of(1e-4) * peak {
            return Err(Error::Config(format!(
                "bound state {idx} not decayed at r_max (tail/peak = {:.2e}); enlarge the domain",
                (tail / peak).to_f64_lossy()
            )));
        }
    }
    Ok(EigenBasis {
        eigenvalues: values,
        eigenfunctions: vectors,
        h,
    })
}

impl<R: Real> EigenBasis<R> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spacing(&self) -> R {
        self.h
    }

    /// Mode overlap `⟨φ_j, f⟩` (bilinear; `φ_j` real).
    pub fn mode_overlap(&self, j: usize, f: &[Cplx<R>]) -> Cplx<R> {
        let phi = &self.eigenfunctions[j];
        let mut acc = Cplx::new(R::zero(), R::zero());
        for (p, x) in phi.iter().zip(f) {
            acc += x * *p;
        }
        acc * self.h
    }

    /// Projection onto the orthogonal complement of the bound states.
    pub fn project_continuous(&self, f: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut out = f.to_vec();
        for j in 0..self.len() {
            let c = self.mode_overlap(j, &out);
            let phi = &self.eigenfunctions[j];
            for (o, p) in out.iter_mut().zip(phi) {
                *o -= c * *p;
            }
        }
        out
    }

    pub fn project_continuous_real(&self, f: &[R]) -> Vec<R> {
        let mut out = f.to_vec();
        for j in 0..self.len() {
            let c = dot_real(self.h, &self.eigenfunctions[j], &out);
            for (o, p) in out.iter_mut().zip(&self.eigenfunctions[j]) {
                *o -= c * *p;
            }
        }
        out
    }

    /// Largest orthonormality defect `|⟨φ_i, φ_j⟩ - δ_ij|`.
    pub fn orthonormality_defect(&self) -> R {
        let mut worst = R::zero();
        for i in 0..self.len() {
            for j in i..self.len() {
                let d = dot_real(self.h, &self.eigenfunctions[i], &self.eigenfunctions[j]);
                let target = if i == j { R::one() } else { R::zero() };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }
}

/// Heuristic zero-energy resonance monitor: integrate the zero-energy
/// regular solution and report the ratio of its constant to linear part at
/// the domain edge. A vanishing linear part signals a threshold resonance.
pub fn zero_energy_resonance_indicator<R: Real>(op: &DiscreteOperator<R>) -> R {
    let grid = op.grid();
    let n = grid.len();
    let h = grid.spacing();
    // Second-order integration of -u'' + V u = 0, u(0)=0, u'(0)=1.
    let mut u_prev = R::zero();
    let mut u = h;
    let mut us: Vec<R> = Vec::with_capacity(n);
    us.push(u);
    for k in 1..n {
        let v = op.potential().eval(grid.node(k - 1));
        let u_next = R::of(2.0) * u - u_prev + h * h * v * u;
        u_prev = u;
        u = u_next;
        us.push(u);
    }
    // Fit u ≈ a + b r over the outer quarter.
    let k0 = (3 * n) / 4;
    let m = n - k0;
    let (mut sr, mut sr2, mut su, mut sru) = (R::zero(), R::zero(), R::zero(), R::zero());
    for k in k0..n {
        let r = grid.node(k);
        sr += r;
        sr2 += r * r;
        su += us[k];
        sru += r * us[k];
    }
    let mf = R::of(m as f64);
    let det = mf * sr2 - sr * sr;
    let b = (mf * sru - sr * su) / det;
    let a = (su * sr2 - sr * sru) / det;
    // Large |a/(b·r_max)| means the growing part is suppressed.
    (a / (b * grid.r_max() + a.signum() * R::min_positive_value())).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{to_complex, Potential, RadialGrid};
    use crate::operator::build_operator;

    fn well_fixture() -> (RadialGrid<f64>, DiscreteOperator<f64>, EigenBasis<f64>) {
        let grid = RadialGrid::new(24.0, 480).unwrap();
        let op = build_operator(&grid, &Potential::gaussian_well(6.0, 2.0), 1e-8).unwrap();
        let basis = eigenbasis(&op, 8, 1e-6).unwrap();
        (grid, op, basis)
    }

    #[test]
    fn zero_potential_gives_empty_basis() {
        let grid = RadialGrid::new(20.0, 256).unwrap();
        let op = build_operator(&grid, &Potential::zero(), 1e-10).unwrap();
        let basis = eigenbasis(&op, 4, 1e-6).unwrap();
        assert!(basis.is_empty());
    }

    #[test]
    fn well_supports_two_levels_matching_dense_oracle() {
        let (grid, op, basis) = well_fixture();
        assert_eq!(basis.len(), 2, "eigenvalues: {:?}", basis.eigenvalues);
        assert!(basis.eigenvalues[0] < basis.eigenvalues[1]);
        assert!(basis.eigenvalues[1] < 0.0);
        // Dense oracle on the same matrix.
        let n = grid.len();
        let a = op.matrix();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] = a.entry(i, j);
            }
        }
        let eig = dense.symmetric_eigen();
        let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (m, d) in basis.eigenvalues.iter().zip(&evs) {
            assert!((m - d).abs() < 1e-6 * d.abs(), "banded {m} vs dense {d}");
        }
    }

    #[test]
    fn deeper_well_lowers_ground_state() {
        let grid = RadialGrid::new(24.0, 480).unwrap();
        let shallow = build_operator(&grid, &Potential::gaussian_well(5.0, 2.0), 1e-8).unwrap();
        let deep = build_operator(&grid, &Potential::gaussian_well(7.0, 2.0), 1e-8).unwrap();
        let bs = eigenbasis(&shallow, 1, 1e-6).unwrap();
        let bd = eigenbasis(&deep, 1, 1e-6).unwrap();
        assert!(bd.eigenvalues[0] < bs.eigenvalues[0]);
    }

    #[test]
    fn orthonormality_within_tolerance() {
        let (_, _, basis) = well_fixture();
        assert!(basis.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn projector_annihilates_modes_and_is_idempotent() {
        let (grid, _, basis) = well_fixture();
        let h = grid.spacing();
        // f = φ_1 → 0.
        let f = to_complex(&basis.eigenfunctions[0]);
        let p = basis.project_continuous(&f);
        assert!(crate::grid::norm(h, &p) < 1e-12);
        // f = φ_1 + g with g ⊥ basis → g; idempotence on the result.
        let mut g: Vec<Cplx<f64>> = (0..grid.len())
            .map(|k| Cplx::new((0.3 * k as f64).sin(), (0.17 * k as f64).cos()))
            .collect();
        g = basis.project_continuous(&g);
        let mut fg = g.clone();
        for (v, p1) in fg.iter_mut().zip(&basis.eigenfunctions[0]) {
            *v += Cplx::new(*p1, 0.0);
        }
        let back = basis.project_continuous(&fg);
        let mut diff = 0.0f64;
        for (b, gg) in back.iter().zip(&g) {
            diff = diff.max((b - gg).norm());
        }
        assert!(diff < 1e-12);
        let twice = basis.project_continuous(&back);
        for (a, b) in twice.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn projector_self_adjoint() {
        let (grid, _, basis) = well_fixture();
        let h = grid.spacing();
        let f: Vec<Cplx<f64>> = (0..grid.len())
            .map(|k| Cplx::new((0.21 * k as f64).sin(), (0.4 + 0.05 * k as f64).cos()))
            .collect();
        let g: Vec<Cplx<f64>> = (0..grid.len())
            .map(|k| Cplx::new((0.13 * k as f64).cos(), (0.29 * k as f64).sin()))
            .collect();
        let pf = basis.project_continuous(&f);
        let pg = basis.project_continuous(&g);
        let lhs = crate::grid::dot(h, &pf, &g);
        let rhs = crate::grid::dot(h, &f, &pg);
        assert!((lhs - rhs).norm() < 1e-12 * (crate::grid::norm(h, &f) * crate::grid::norm(h, &g)));
    }

    #[test]
    fn eigenvector_residuals_small() {
        let (grid, op, basis) = well_fixture();
        let h = grid.spacing();
        for (lam, v) in basis.eigenvalues.iter().zip(&basis.eigenfunctions) {
            let hv = op.apply_real(v);
            let mut res = 0.0;
            for (a, b) in hv.iter().zip(v) {
                res += (a - lam * b).powi(2);
            }
            assert!((res * h).sqrt() < 1e-8, "residual for λ = {lam}");
        }
    }

    #[test]
    fn resolvent_on_eigenvector_is_scaled_eigenvector() {
        let (grid, op, basis) = well_fixture();
        let e1 = basis.eigenvalues[0];
        let lam = e1 + 1.0; // stays below 0 and away from levels for this well
        assert!(lam < 0.0);
        let f = to_complex(&basis.eigenfunctions[0]);
        let x = op
            .resolvent_solve(lam, &f, &basis.eigenvalues, 1e-8)
            .unwrap();
        // x = φ/(e1 - λ) = -φ for λ = e1 + 1.
        let h = grid.spacing();
        let mut diff = vec![Cplx::new(0.0, 0.0); x.len()];
        for k in 0..x.len() {
            diff[k] = x[k] - Cplx::new(basis.eigenfunctions[0][k] / (e1 - lam), 0.0);
        }
        assert!(crate::grid::norm(h, &diff) < 1e-8);
    }

    #[test]
    fn resolvent_collision_at_eigenvalue() {
        let (_, op, basis) = well_fixture();
        let f = to_complex(&basis.eigenfunctions[0]);
        assert!(matches!(
            op.resolvent_solve(basis.eigenvalues[1], &f, &basis.eigenvalues, 1e-8),
            Err(Error::SpectrumCollision(_))
        ));
    }
}
