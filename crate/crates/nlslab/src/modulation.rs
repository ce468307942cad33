//! Modulation coordinates: splitting a field into mode amplitudes and a
//! radiation component.
//!
//! A field `u` near the origin decomposes uniquely as
//! `u = Σ_j Q_{j z_j} + Θ` where `Θ` satisfies the 2n real symplectic
//! constraints `Re⟨i Θ̄, D_{jA} Q_{j z_j}⟩ = 0`. The radiation coordinate is
//! `η = P_c Θ`; the correction operator `R[z]` maps it back, `Θ = R[z] η`,
//! by adding mode components determined by a small linear system.

use crate::bound::BoundStateFamily;
use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::grid::{dot, norm};
use crate::scalar::{cr, Cplx, Real};

/// Mode amplitudes plus radiation, the lab's phase-space point.
#[derive(Debug, Clone)]
pub struct ModulationState<R: Real> {
    pub z: Vec<Cplx<R>>,
    pub eta: Vec<Cplx<R>>,
}

/// Correction operator turning `P_c`-radiation into constraint-satisfying
/// radiation: `R[z] f = f + Σ_j (⟨B'_j, f⟩ + ⟨C_j, f̄⟩) φ_j`.
#[derive(Debug, Clone)]
pub struct ROperator<R: Real> {
    pub z: Vec<Cplx<R>>,
    /// `B'_j` profiles (the pairing against `f`).
    pub b_prime: Vec<Vec<Cplx<R>>>,
    /// `C_j` profiles (the pairing against `f̄`).
    pub c: Vec<Vec<Cplx<R>>>,
    phi: Vec<Vec<R>>,
    h: R,
}

/// Solve a small dense complex system by Gaussian elimination with partial
/// pivoting; `rhs` columns are function-valued and handled by the caller
/// through the returned inverse-응 action. Here we just invert in place.
fn solve_dense_complex<R: Real>(mut a: Vec<Vec<Cplx<R>>>, mut rhs: Vec<Vec<Cplx<R>>>) -> Result<Vec<Vec<Cplx<R>>>> {
    let m = a.len();
    for col in 0..m {
        let mut p = col;
        let mut best = a[col][col].norm();
        for r in col + 1..m {
            if a[r][col].norm() > best {
                best = a[r][col].norm();
                p = r;
            }
        }
        if best < R::of(1e-14) {
            return Err(Error::ChartRadius(
                "correction-operator system singular (amplitude too large)".into(),
            ));
        }
        a.swap(col, p);
        rhs.swap(col, p);
        let piv = a[col][col];
        for r in 0..m {
            if r == col {
                continue;
            }
            let factor = a[r][col] / piv;
            for cc in col..m {
                let v = a[col][cc];
                a[r][cc] -= factor * v;
            }
            let (head, tail) = rhs.split_at_mut(col.max(r).min(m));
            let _ = (head, tail);
            let src = rhs[col].clone();
            for (dst, s) in rhs[r].iter_mut().zip(&src) {
                *dst -= factor * s;
            }
        }
    }
    for col in 0..m {
        let piv = a[col][col];
        for v in rhs[col].iter_mut() {
            *v /= piv;
        }
    }
    Ok(rhs)
}

/// Build the correction operator at amplitude vector `z`.
pub fn build_r_operator<R: Real>(
    z: &[Cplx<R>],
    families: &[BoundStateFamily<R>],
    basis: &EigenBasis<R>,
) -> Result<ROperator<R>> {
    let n = families.len();
    let h = basis.spacing();
    let npts = basis.eigenfunctions[0].len();
    // Per-mode ansatz derivatives.
    let mut d_q = Vec::with_capacity(n); // ∂_l q_l
    let mut d_qbar = Vec::with_capacity(n); // ∂_l̄ q_l
    for (l, fam) in families.iter().enumerate() {
        let (dz, dzb) = fam.correction_derivatives(z[l])?;
        d_q.push(dz);
        d_qbar.push(dzb);
    }
    // Unknown stacking: x = [B̄'_1 … B̄'_n, C_1 … C_n].
    // Row (I, l):  Σ_j (δ_jl + ⟨φ_j, ∂_l q_l⟩) B̄'_j - ⟨φ_j, ∂_l q̄_l⟩ C_j
    //              = -(φ_l + ∂_l q_l)
    // Row (II, l): Σ_j ⟨φ_j, ∂_l̄ q_l⟩ B̄'_j - (δ_jl + ⟨φ_j, ∂_l̄ q̄_l⟩) C_j
    //              = -∂_l̄ q_l
    let m = 2 * n;
    let mut a = vec![vec![Cplx::new(R::zero(), R::zero()); m]; m];
    let mut rhs: Vec<Vec<Cplx<R>>> = vec![vec![Cplx::new(R::zero(), R::zero()); npts]; m];
    for l in 0..n {
        let dql = &d_q[l];
        let dqbl = &d_qbar[l];
        // ∂_l q̄_l = conj(∂_l̄ q_l); ∂_l̄ q̄_l = conj(∂_l q_l).
        for j in 0..n {
            let phi_j = crate::grid::to_complex(&basis.eigenfunctions[j]);
            let s = dot(h, &phi_j, dql);
            let c_ = dot(h, &phi_j, &dqbl.iter().map(|v| v.conj()).collect::<Vec<_>>());
            let s_hat = dot(h, &phi_j, dqbl);
            let c_hat = dot(h, &phi_j, &dql.iter().map(|v| v.conj()).collect::<Vec<_>>());
            a[l][j] = s + if j == l { cr(R::one()) } else { cr(R::zero()) };
            a[l][n + j] = -c_;
            a[n + l][j] = s_hat;
            a[n + l][n + j] = -(c_hat + if j == l { cr(R::one()) } else { cr(R::zero()) });
        }
        for k in 0..npts {
            rhs[l][k] = -(Cplx::new(basis.eigenfunctions[l][k], R::zero()) + dql[k]);
            rhs[n + l][k] = -dqbl[k];
        }
    }
    let x = solve_dense_complex(a, rhs)?;
    let mut b_prime = Vec::with_capacity(n);
    let mut c_rows = Vec::with_capacity(n);
    for j in 0..n {
        b_prime.push(x[j].iter().map(|v| v.conj()).collect());
        c_rows.push(x[n + j].clone());
    }
    Ok(ROperator {
        z: z.to_vec(),
        b_prime,
        c: c_rows,
        phi: basis.eigenfunctions.clone(),
        h,
    })
}

impl<R: Real> ROperator<R> {
    /// `α_j[z] f = ⟨B'_j, f⟩ + ⟨C_j, f̄⟩` (bilinear pairings).
    pub fn alpha(&self, j: usize, f: &[Cplx<R>]) -> Cplx<R> {
        let fbar: Vec<Cplx<R>> = f.iter().map(|v| v.conj()).collect();
        dot(self.h, &self.b_prime[j], f) + dot(self.h, &self.c[j], &fbar)
    }

    pub fn apply(&self, f: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let mut out = f.to_vec();
        for j in 0..self.phi.len() {
            let a = self.alpha(j, f);
            for (o, p) in out.iter_mut().zip(&self.phi[j]) {
                *o += a * *p;
            }
        }
        out
    }

    /// Worst violation of the 2n symplectic range constraints on `R[z]f`.
    pub fn range_defect(
        &self,
        families: &[BoundStateFamily<R>],
        f: &[Cplx<R>],
    ) -> Result<R> {
        let rf = self.apply(f);
        let rf_bar: Vec<Cplx<R>> = rf.iter().map(|v| v.conj()).collect();
        let i = Cplx::new(R::zero(), R::one());
        let mut worst = R::zero();
        let scale = norm(self.h, &rf).max(R::min_positive_value());
        for (l, fam) in families.iter().enumerate() {
            let (dr, di) = fam.real_imag_derivatives(self.z[l])?;
            for d in [dr, di] {
                // Re⟨i (Rf)bar, D Q⟩
                let val = (dot(self.h, &rf_bar, &d) * i).re;
                worst = worst.max(val.abs() / scale);
            }
        }
        Ok(worst)
    }
}

/// Synthesis map: `u = Σ_j Q_{j z_j} + R[z] η`.
pub fn synthesize<R: Real>(
    state: &ModulationState<R>,
    families: &[BoundStateFamily<R>],
    basis: &EigenBasis<R>,
) -> Result<Vec<Cplx<R>>> {
    let r = build_r_operator(&state.z, families, basis)?;
    let mut u = r.apply(&state.eta);
    for (j, fam) in families.iter().enumerate() {
        let (q, _) = fam.evaluate(state.z[j])?;
        for (uk, qk) in u.iter_mut().zip(&q) {
            *uk += qk;
        }
    }
    Ok(u)
}

/// Constraint functions `F_{jA}(u, z) = Re⟨u - ΣQ, i·conj(D_{jA}Q_j)⟩`.
fn constraints<R: Real>(
    u: &[Cplx<R>],
    z: &[Cplx<R>],
    families: &[BoundStateFamily<R>],
    h: R,
) -> Result<Vec<R>> {
    let n = families.len();
    let mut theta = u.to_vec();
    for (j, fam) in families.iter().enumerate() {
        let (q, _) = fam.evaluate(z[j])?;
        for (t, qk) in theta.iter_mut().zip(&q) {
            *t -= qk;
        }
    }
    let i = Cplx::new(R::zero(), R::one());
    let mut out = Vec::with_capacity(2 * n);
    for (j, fam) in families.iter().enumerate() {
        let (dr, di) = fam.real_imag_derivatives(z[j])?;
        for d in [dr, di] {
            let dconj: Vec<Cplx<R>> = d.iter().map(|v| v.conj()).collect();
            out.push((dot(h, &theta, &dconj) * i).re);
        }
    }
    Ok(out)
}

/// Decompose a field into modulation coordinates by Newton iteration on the
/// symplectic constraints, then `η = P_c(u - ΣQ)`.
pub fn decompose<R: Real>(
    u: &[Cplx<R>],
    families: &[BoundStateFamily<R>],
    basis: &EigenBasis<R>,
    tol: R,
    warm_start: Option<&[Cplx<R>]>,
) -> Result<ModulationState<R>> {
    let n = families.len();
    let h = basis.spacing();
    let mut z: Vec<Cplx<R>> = match warm_start {
        Some(w) => w.to_vec(),
        None => (0..n).map(|j| basis.mode_overlap(j, u)).collect(),
    };
    let chart = families
        .iter()
        .map(|f| f.rho_max)
        .fold(R::infinity(), |a, b| a.min(b));
    let unorm = norm(h, u);
    let scale = unorm.max(R::of(1e-3));
    let mut converged = false;
    for _ in 0..40 {
        let f = constraints(u, &z, families, h)?;
        let fmax = f.iter().fold(R::zero(), |m, v| m.max(v.abs()));
        if fmax < tol * scale {
            converged = true;
            break;
        }
        // Finite-difference Jacobian in the 2n real coordinates.
        let m = 2 * n;
        let step = (R::of(1e-7) * scale).max(R::of(1e-9));
        let mut jac = vec![vec![R::zero(); m]; m];
        for col in 0..m {
            let mut zp = z.clone();
            let (j, re_part) = (col / 2, col % 2 == 0);
            if re_part {
                zp[j].re += step;
            } else {
                zp[j].im += step;
            }
            let fp = constraints(u, &zp, families, h)?;
            for row in 0..m {
                jac[row][col] = (fp[row] - f[row]) / step;
            }
        }
        // Solve jac · δ = -f (dense, tiny).
        let mut aug: Vec<Vec<R>> = jac
            .iter()
            .zip(&f)
            .map(|(row, &fv)| {
                let mut r = row.clone();
                r.push(-fv);
                r
            })
            .collect();
        for col in 0..m {
            let mut p = col;
            for r in col + 1..m {
                if aug[r][col].abs() > aug[p][col].abs() {
                    p = r;
                }
            }
            if aug[p][col].abs() < R::of(1e-13) {
                return Err(Error::ChartRadius("degenerate constraint Jacobian".into()));
            }
            aug.swap(col, p);
            for r in 0..m {
                if r == col {
                    continue;
                }
                let factor = aug[r][col] / aug[col][col];
                for cc in col..=m {
                    let v = aug[col][cc];
                    aug[r][cc] -= factor * v;
                }
            }
        }
        for col in 0..m {
            let d = aug[col][m] / aug[col][col];
            let (j, re_part) = (col / 2, col % 2 == 0);
            if re_part {
                z[j].re += d;
            } else {
                z[j].im += d;
            }
        }
        // Keep the iterate inside the branch.
        for zj in z.iter_mut() {
            let r = zj.norm();
            if r > chart {
                *zj *= cr(chart / r * R::of(0.98));
            }
        }
    }
    if !converged {
        return Err(Error::ChartRadius(format!(
            "constraint Newton did not reach {:.1e} (|u| = {:.3e}, last |z| = {:.3e})",
            tol.to_f64_lossy(),
            unorm.to_f64_lossy(),
            z.iter().map(|v| v.norm_sqr()).sum::<R>().sqrt().to_f64_lossy()
        )));
    }
    let mut theta = u.to_vec();
    for (j, fam) in families.iter().enumerate() {
        let (q, _) = fam.evaluate(z[j])?;
        for (t, qk) in theta.iter_mut().zip(&q) {
            *t -= qk;
        }
    }
    let eta = basis.project_continuous(&theta);
    Ok(ModulationState { z, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound::solve_branch;
    use crate::eigen::eigenbasis;
    use crate::fixtures;
    use crate::operator::build_operator;
    use crate::operator::DiscreteOperator;

    struct Fix {
        op: DiscreteOperator<f64>,
        basis: EigenBasis<f64>,
        families: Vec<BoundStateFamily<f64>>,
    }

    fn fix() -> Fix {
        let grid = fixtures::two_mode_grid::<f64>();
        let op = build_operator(&grid, &fixtures::two_mode_well(), 1e-7).unwrap();
        let basis = eigenbasis(&op, 4, 1e-6).unwrap();
        let families = (0..basis.len())
            .map(|j| solve_branch(&basis, &op, j, 0.35, 25, 1e-11).unwrap())
            .collect();
        Fix { op, basis, families }
    }

    fn random_radiation(fx: &Fix, seed: u64, amplitude: f64) -> Vec<Cplx<f64>> {
        let grid = fx.op.grid();
        let mut state = seed;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let raw: Vec<Cplx<f64>> = (0..grid.len())
            .map(|k| {
                let r = grid.node(k);
                let env = r * (-0.35 * r * r).exp();
                Cplx::new(env * next(), env * next())
            })
            .collect();
        let mut eta = fx.basis.project_continuous(&raw);
        let n = crate::grid::norm(grid.spacing(), &eta);
        for v in eta.iter_mut() {
            *v *= Cplx::new(amplitude / n, 0.0);
        }
        eta
    }

    #[test]
    fn r_operator_is_identity_at_origin() {
        let fx = fix();
        let z = vec![Cplx::new(0.0, 0.0); 2];
        let r = build_r_operator(&z, &fx.families, &fx.basis).unwrap();
        let eta = random_radiation(&fx, 11, 0.01);
        let out = r.apply(&eta);
        let mut worst = 0.0f64;
        for (a, b) in out.iter().zip(&eta) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-14);
    }

    #[test]
    fn r_operator_range_and_quadratic_smallness() {
        let fx = fix();
        let eta = random_radiation(&fx, 5, 0.01);
        let h = fx.basis.spacing();
        let mut devs = Vec::new();
        for amp in [0.02f64, 0.04, 0.08] {
            let z = vec![Cplx::new(amp, 0.3 * amp), Cplx::new(-0.5 * amp, amp)];
            let r = build_r_operator(&z, &fx.families, &fx.basis).unwrap();
            assert!(r.range_defect(&fx.families, &eta).unwrap() < 1e-9);
            let out = r.apply(&eta);
            let mut diff = vec![Cplx::new(0.0, 0.0); eta.len()];
            for k in 0..eta.len() {
                diff[k] = out[k] - eta[k];
            }
            devs.push(crate::grid::norm(h, &diff) / crate::grid::norm(h, &eta));
        }
        // Fitted exponent in |z| of ‖(R[z]-1)η‖ should be at least ~2.
        let p1 = (devs[1] / devs[0]).ln() / 2.0f64.ln();
        let p2 = (devs[2] / devs[1]).ln() / 2.0f64.ln();
        assert!(p1 > 1.9 && p2 > 1.9, "fitted exponents {p1}, {p2}");
    }

    #[test]
    fn r_operator_gauge_covariance() {
        let fx = fix();
        let eta = random_radiation(&fx, 23, 0.02);
        let theta = 0.83f64;
        let ph = Cplx::from_polar(1.0, theta);
        let z = vec![Cplx::new(0.05, 0.02), Cplx::new(-0.01, 0.04)];
        let zr: Vec<Cplx<f64>> = z.iter().map(|v| v * ph).collect();
        let r0 = build_r_operator(&z, &fx.families, &fx.basis).unwrap();
        let r1 = build_r_operator(&zr, &fx.families, &fx.basis).unwrap();
        // R[e^{iθ}z](e^{iθ}η) = e^{iθ} R[z]η.
        let eta_r: Vec<Cplx<f64>> = eta.iter().map(|v| v * ph).collect();
        let lhs = r1.apply(&eta_r);
        let rhs = r0.apply(&eta);
        let mut worst = 0.0f64;
        for (a, b) in lhs.iter().zip(&rhs) {
            worst = worst.max((a - b * ph).norm());
        }
        assert!(worst < 1e-10, "covariance defect {worst}");
    }

    #[test]
    fn leading_coefficient_structure() {
        let fx = fix();
        // Single-mode amplitude: the correction rows reduce to the exact
        // ansatz derivatives.
        let z = vec![Cplx::new(0.12, 0.0), Cplx::new(0.0, 0.0)];
        let r = build_r_operator(&z, &fx.families, &fx.basis).unwrap();
        let (dq, dqb) = fx.families[0].correction_derivatives(z[0]).unwrap();
        let h = fx.basis.spacing();
        // B'_0 + φ_0 = -conj(∂_0 q_0) and C_0 = ∂_0̄ q_0 exactly here.
        let mut diff_b = vec![Cplx::new(0.0, 0.0); dq.len()];
        let mut diff_c = vec![Cplx::new(0.0, 0.0); dq.len()];
        for k in 0..dq.len() {
            diff_b[k] =
                r.b_prime[0][k] + Cplx::new(fx.basis.eigenfunctions[0][k], 0.0) + dq[k].conj();
            diff_c[k] = r.c[0][k] - dqb[k];
        }
        assert!(crate::grid::norm(h, &diff_b) < 1e-10);
        assert!(crate::grid::norm(h, &diff_c) < 1e-10);
    }

    #[test]
    fn decompose_zero_field() {
        let fx = fix();
        let u = vec![Cplx::new(0.0, 0.0); fx.op.len()];
        let st = decompose(&u, &fx.families, &fx.basis, 1e-12, None).unwrap();
        assert!(st.z.iter().all(|v| v.norm() < 1e-12));
        assert!(crate::grid::norm(fx.basis.spacing(), &st.eta) < 1e-12);
    }

    #[test]
    fn decompose_pure_standing_wave() {
        let fx = fix();
        let z0 = Cplx::from_polar(0.11, 0.6);
        let (q, _) = fx.families[0].evaluate(z0).unwrap();
        let st = decompose(&q, &fx.families, &fx.basis, 1e-12, None).unwrap();
        assert!((st.z[0] - z0).norm() < 1e-10, "z = {:?}", st.z);
        assert!(st.z[1].norm() < 1e-10);
        assert!(crate::grid::norm(fx.basis.spacing(), &st.eta) < 1e-9);
    }

    #[test]
    fn round_trip_synthesize_decompose() {
        let fx = fix();
        let h = fx.basis.spacing();
        for seed in [3u64, 17, 91] {
            let eta = random_radiation(&fx, seed, 0.02);
            let z = vec![
                Cplx::new(0.06, -0.03),
                Cplx::new(0.02, 0.05),
            ];
            let state = ModulationState { z: z.clone(), eta: eta.clone() };
            let u = synthesize(&state, &fx.families, &fx.basis).unwrap();
            let back = decompose(&u, &fx.families, &fx.basis, 1e-13, None).unwrap();
            let mut zerr = 0.0f64;
            for (a, b) in back.z.iter().zip(&z) {
                zerr = zerr.max((a - b).norm());
            }
            let mut ediff = vec![Cplx::new(0.0, 0.0); eta.len()];
            for k in 0..eta.len() {
                ediff[k] = back.eta[k] - eta[k];
            }
            let eerr = crate::grid::norm(h, &ediff) / crate::grid::norm(h, &eta);
            assert!(zerr < 1e-9, "z round-trip error {zerr}");
            assert!(eerr < 1e-8, "eta round-trip error {eerr}");
        }
    }

    #[test]
    fn decompose_gauge_equivariance() {
        let fx = fix();
        let eta = random_radiation(&fx, 41, 0.015);
        let z = vec![Cplx::new(0.05, 0.01), Cplx::new(-0.02, 0.03)];
        let state = ModulationState { z, eta };
        let u = synthesize(&state, &fx.families, &fx.basis).unwrap();
        let ph = Cplx::from_polar(1.0, 1.1);
        let ur: Vec<Cplx<f64>> = u.iter().map(|v| v * ph).collect();
        let a = decompose(&u, &fx.families, &fx.basis, 1e-13, None).unwrap();
        let b = decompose(&ur, &fx.families, &fx.basis, 1e-13, None).unwrap();
        let mut worst = 0.0f64;
        for (x, y) in a.z.iter().zip(&b.z) {
            worst = worst.max((x * ph - y).norm());
        }
        for (x, y) in a.eta.iter().zip(&b.eta) {
            worst = worst.max((x * ph - y).norm());
        }
        assert!(worst < 1e-10, "gauge defect {worst}");
    }

    #[test]
    fn coordinate_norms_comparable() {
        let fx = fix();
        let h = fx.basis.spacing();
        let eta = random_radiation(&fx, 77, 0.03);
        let z = vec![Cplx::new(0.04, 0.0), Cplx::new(0.0, 0.03)];
        let state = ModulationState { z: z.clone(), eta: eta.clone() };
        let u = synthesize(&state, &fx.families, &fx.basis).unwrap();
        let unorm = crate::grid::norm(h, &u);
        let znorm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let enorm = crate::grid::norm(h, &eta);
        let total = znorm + enorm;
        assert!(unorm < 3.0 * total && total < 3.0 * unorm);
    }
}
