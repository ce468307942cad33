//! Nonlinear standing-wave branches bifurcating from the linear modes.
//!
//! For each mode `φ_j` the branch `ρ ↦ (Q_{jρ}, E_{jρ})` solves
//! `H Q + ν|Q|²Q = E Q` with `Q = ρφ_j + q`, `⟨q, φ_j⟩ = 0`, `q` real.
//! Complex amplitudes follow by phase covariance: `Q_{jz} = e^{iθ} Q_{j|z|}`.
//! Internally everything is tabulated against `t = ρ²`, in which the branch
//! is smooth; profiles are interpolated with local cubics.

use crate::eigen::EigenBasis;
use crate::error::{Error, Result};
use crate::grid::{dot_real, norm_real};
use crate::linalg::BandLU;
use crate::operator::DiscreteOperator;
use crate::scalar::{Cplx, Real};

/// One solved branch: mode index, amplitude samples and profiles.
#[derive(Debug, Clone)]
pub struct BoundStateFamily<R: Real> {
    pub mode: usize,
    pub e_linear: R,
    pub phi: Vec<R>,
    /// `t = ρ²` samples, ascending, starting at the exact `t = 0` row.
    pub t_samples: Vec<R>,
    /// `q̂_j(t)` profiles (`q_{jρ} = ρ · q̂_j(ρ²)`, real).
    pub q_hat: Vec<Vec<R>>,
    /// `E_j(t)` with `E_j(0) = e_j`.
    pub energy: Vec<R>,
    pub rho_max: R,
    h: R,
}

/// Scaling and residual certificates for a solved branch.
#[derive(Debug, Clone)]
pub struct BranchCertificate<R: Real> {
    /// Fitted log-log slope of `‖q_ρ‖` against `ρ` over one decade.
    pub q_norm_exponent: R,
    /// Extrapolated `(E_ρ - e_j)/ρ²` as `ρ → 0`.
    pub e_quad_coefficient: R,
    /// Independent quadrature of `∫ ν φ_j⁴`.
    pub phi_quartic: R,
    /// Worst relative residual of the standing-wave equation over samples.
    pub max_residual: R,
}

/// Relative residual `‖HQ + ν|Q|²Q - EQ‖ / ‖Q‖` for a real profile.
fn branch_residual<R: Real>(op: &DiscreteOperator<R>, q_full: &[R], e: R) -> R {
    let grid = op.grid();
    let hq = op.apply_real(q_full);
    let mut res = R::zero();
    let mut nq = R::zero();
    for k in 0..q_full.len() {
        let nu = grid.cubic_weight(k);
        let r = hq[k] + nu * q_full[k] * q_full[k] * q_full[k] - e * q_full[k];
        res += r * r;
        nq += q_full[k] * q_full[k];
    }
    (res / nq.max(R::min_positive_value())).sqrt()
}

/// One bordered Newton solve at fixed amplitude ρ, warm-started from
/// `(q0, e0)`. Returns `(q, E)` with `⟨φ, q⟩ = 0`.
fn newton_at_amplitude<R: Real>(
    op: &DiscreteOperator<R>,
    phi: &[R],
    rho: R,
    q0: &[R],
    e0: R,
    tol: R,
    max_iter: usize,
) -> Result<(Vec<R>, R)> {
    let grid = op.grid();
    let n = grid.len();
    let h = grid.spacing();
    let mut q = q0.to_vec();
    let mut e = e0;
    for _ in 0..max_iter {
        // Assemble Q = ρφ + q and the two residual blocks.
        let qf: Vec<R> = phi.iter().zip(&q).map(|(p, qq)| rho * *p + *qq).collect();
        let hq = op.apply_real(&qf);
        let mut f = vec![R::zero(); n];
        for k in 0..n {
            let nu = grid.cubic_weight(k);
            f[k] = hq[k] + nu * qf[k] * qf[k] * qf[k] - e * qf[k];
        }
        let g = dot_real(h, phi, &q);
        let fnorm = norm_real(h, &f) / norm_real(h, &qf).max(R::min_positive_value());
        if fnorm < tol && g.abs() < tol {
            return Ok((q, e));
        }
        // Jacobian A = H + 3νQ² - E (diagonal modification only).
        let extra: Vec<R> = (0..n)
            .map(|k| R::of(3.0) * grid.cubic_weight(k) * qf[k] * qf[k] - e)
            .collect();
        let a = op.with_extra_diagonal(&extra);
        let lu = BandLU::<R>::factor(n, |i, j| a.entry(i, j))
            .ok_or_else(|| Error::Convergence("singular branch Jacobian".into()))?;
        // Bordered elimination: A δq - Q δE = -F, ⟨φ, δq⟩ = -g,
        // so δq = y1 + y2 δE with y1 = A⁻¹(-F), y2 = A⁻¹Q.
        let mut y1: Vec<R> = f.iter().map(|v| -*v).collect();
        lu.solve(&mut y1);
        let mut y2: Vec<R> = qf.clone();
        lu.solve(&mut y2);
        let denom = dot_real(h, phi, &y2);
        if denom.abs() < R::min_positive_value() {
            return Err(Error::Convergence("degenerate bordered system".into()));
        }
        let de = -(dot_real(h, phi, &y1) + g) / denom;
        for k in 0..n {
            q[k] += y1[k] + y2[k] * de;
        }
        e += de;
        if !e.is_finite() {
            return Err(Error::Convergence("Newton iterate diverged".into()));
        }
    }
    Err(Error::Convergence(format!(
        "branch Newton stalled at ρ = {:.4e}",
        rho.to_f64_lossy()
    )))
}

/// Continue the branch of mode `j` up to `rho_max` with `n_samples`
/// log-spaced amplitudes.
pub fn solve_branch<R: Real>(
    basis: &EigenBasis<R>,
    op: &DiscreteOperator<R>,
    mode: usize,
    rho_max: R,
    n_samples: usize,
    tol: R,
) -> Result<BoundStateFamily<R>> {
    if mode >= basis.len() {
        return Err(Error::Config(format!(
            "mode {mode} not in basis of {} states",
            basis.len()
        )));
    }
    let phi = basis.eigenfunctions[mode].clone();
    let e_lin = basis.eigenvalues[mode];
    let grid = op.grid();
    let h = grid.spacing();
    let n = grid.len();
    let n_samples = n_samples.max(8);
    let rho_min = rho_max / R::of(50.0);
    let ratio = (rho_max / rho_min).powf((R::of(n_samples as f64) - R::one()).recip());

    // Leading-order energy slope for the first warm start.
    let quartic: R = (0..n)
        .map(|k| grid.cubic_weight(k) * phi[k].powi(4))
        .sum::<R>()
        * h;

    let mut t_samples = vec![R::zero()];
    let mut q_hat: Vec<Vec<R>> = vec![vec![R::zero(); n]];
    let mut energy = vec![e_lin];

    let mut q_warm = vec![R::zero(); n];
    let mut e_warm = e_lin + rho_min * rho_min * quartic;
    let mut rho_prev = R::zero();
    let mut rho = rho_min;
    let mut reached = R::zero();
    let mut samples_done = 0usize;
    while samples_done < n_samples {
        let attempt = newton_at_amplitude(op, &phi, rho, &q_warm, e_warm, tol, 30);
        match attempt {
            Ok((q, e)) => {
                let t = rho * rho;
                t_samples.push(t);
                q_hat.push(q.iter().map(|&v| v / rho).collect());
                energy.push(e);
                reached = rho;
                samples_done += 1;
                // Predict the next sample by cubic amplitude scaling.
                let rho_next = (rho * ratio).min(rho_max);
                let scale = (rho_next / rho).powi(3);
                q_warm = q.iter().map(|&v| v * scale).collect();
                e_warm = e_lin + (e - e_lin) * (rho_next * rho_next) / (rho * rho);
                if rho >= rho_max {
                    break;
                }
                rho_prev = rho;
                rho = rho_next;
            }
            Err(err) => {
                // Halve the step toward the failing amplitude.
                let mid = (rho_prev + rho) * R::of(0.5);
                if mid <= rho_prev || (rho - rho_prev) < rho_max * R::of(1e-4) {
                    return Err(Error::BranchRadius {
                        last_good: reached.to_f64_lossy(),
                        detail: format!("{err}"),
                    });
                }
                rho = mid;
            }
        }
    }
    Ok(BoundStateFamily {
        mode,
        e_linear: e_lin,
        phi,
        t_samples,
        q_hat,
        energy,
        rho_max: reached,
        h,
    })
}

impl<R: Real> BoundStateFamily<R> {
    pub fn spacing(&self) -> R {
        self.h
    }

    /// Local cubic (4-point Lagrange) interpolation of a tabulated row.
    fn interp_stencil(&self, t: R) -> ([usize; 4], [R; 4], [R; 4]) {
        let ts = &self.t_samples;
        let m = ts.len();
        let mut hi = m - 1;
        for (i, &tv) in ts.iter().enumerate() {
            if tv >= t {
                hi = i;
                break;
            }
        }
        let i1 = hi.max(1);
        let lo = i1.saturating_sub(2).min(m.saturating_sub(4));
        let idx = [lo, lo + 1, lo + 2, lo + 3];
        let mut w = [R::zero(); 4];
        let mut dw = [R::zero(); 4];
        for a in 0..4 {
            let ta = ts[idx[a]];
            let mut num = R::one();
            let mut den = R::one();
            for b in 0..4 {
                if a == b {
                    continue;
                }
                num *= t - ts[idx[b]];
                den *= ta - ts[idx[b]];
            }
            w[a] = num / den;
            // Derivative of the Lagrange basis polynomial.
            let mut dsum = R::zero();
            for c in 0..4 {
                if c == a {
                    continue;
                }
                let mut prod = R::one();
                for b in 0..4 {
                    if b == a || b == c {
                        continue;
                    }
                    prod *= t - ts[idx[b]];
                }
                dsum += prod;
            }
            dw[a] = dsum / den;
        }
        (idx, w, dw)
    }

    /// Interpolated `(q̂(t), E(t))`.
    pub fn profile_at(&self, t: R) -> (Vec<R>, R) {
        let (idx, w, _) = self.interp_stencil(t);
        let n = self.phi.len();
        let mut q = vec![R::zero(); n];
        let mut e = R::zero();
        for a in 0..4 {
            let row = &self.q_hat[idx[a]];
            for k in 0..n {
                q[k] += w[a] * row[k];
            }
            e += w[a] * self.energy[idx[a]];
        }
        (q, e)
    }

    /// Interpolated `(q̂(t), q̂'(t), E(t), E'(t))`.
    pub fn profile_with_derivative(&self, t: R) -> (Vec<R>, Vec<R>, R, R) {
        let (idx, w, dw) = self.interp_stencil(t);
        let n = self.phi.len();
        let mut q = vec![R::zero(); n];
        let mut dq = vec![R::zero(); n];
        let mut e = R::zero();
        let mut de = R::zero();
        for a in 0..4 {
            let row = &self.q_hat[idx[a]];
            for k in 0..n {
                q[k] += w[a] * row[k];
                dq[k] += dw[a] * row[k];
            }
            e += w[a] * self.energy[idx[a]];
            de += dw[a] * self.energy[idx[a]];
        }
        (q, dq, e, de)
    }

    /// Evaluate the branch at complex amplitude `z`: `Q = e^{iθ}(ρφ + ρq̂)`.
    pub fn evaluate(&self, z: Cplx<R>) -> Result<(Vec<Cplx<R>>, R)> {
        let rho = z.norm();
        if rho > self.rho_max * (R::one() + R::of(1e-12)) {
            return Err(Error::OutOfBranch(
                rho.to_f64_lossy(),
                self.rho_max.to_f64_lossy(),
            ));
        }
        let t = rho * rho;
        let (qhat, e) = self.profile_at(t);
        // z = e^{iθ}ρ: Q = z·(φ + q̂).
        let q: Vec<Cplx<R>> = self
            .phi
            .iter()
            .zip(&qhat)
            .map(|(p, qh)| z * (*p + *qh))
            .collect();
        Ok((q, e))
    }

    /// Real-amplitude full profile `Q_ρ = ρ(φ + q̂(ρ²))`.
    pub fn real_profile(&self, rho: R) -> Result<(Vec<R>, R)> {
        if rho > self.rho_max * (R::one() + R::of(1e-12)) {
            return Err(Error::OutOfBranch(
                rho.to_f64_lossy(),
                self.rho_max.to_f64_lossy(),
            ));
        }
        let (qhat, e) = self.profile_at(rho * rho);
        Ok((
            self.phi
                .iter()
                .zip(&qhat)
                .map(|(p, qh)| rho * (*p + *qh))
                .collect(),
            e,
        ))
    }

    /// Correction-part derivatives at complex amplitude `z`, from the
    /// smooth-ansatz structure `q = z q̂(|z|²)`:
    /// `∂_z q = q̂ + |z|² q̂'` and `∂_z̄ q = z² q̂'`.
    pub fn correction_derivatives(&self, z: Cplx<R>) -> Result<(Vec<Cplx<R>>, Vec<Cplx<R>>)> {
        let rho = z.norm();
        if rho > self.rho_max * (R::one() + R::of(1e-12)) {
            return Err(Error::OutOfBranch(
                rho.to_f64_lossy(),
                self.rho_max.to_f64_lossy(),
            ));
        }
        let t = rho * rho;
        let (qhat, dqhat, _, _) = self.profile_with_derivative(t);
        let z2 = z * z;
        let dz: Vec<Cplx<R>> = qhat
            .iter()
            .zip(&dqhat)
            .map(|(q, dq)| Cplx::new(*q + t * *dq, R::zero()))
            .collect();
        let dzbar: Vec<Cplx<R>> = dqhat.iter().map(|dq| z2 * *dq).collect();
        Ok((dz, dzbar))
    }

    /// Derivatives of the full profile `Q_{jz} = zφ + q`:
    /// `(∂_z Q, ∂_z̄ Q)`.
    pub fn q_derivatives(&self, z: Cplx<R>) -> Result<(Vec<Cplx<R>>, Vec<Cplx<R>>)> {
        let (mut dz, dzbar) = self.correction_derivatives(z)?;
        for (d, p) in dz.iter_mut().zip(&self.phi) {
            *d += Cplx::new(*p, R::zero());
        }
        Ok((dz, dzbar))
    }

    /// `D_R Q = ∂_z Q + ∂_z̄ Q` and `D_I Q = i(∂_z Q - ∂_z̄ Q)`.
    pub fn real_imag_derivatives(&self, z: Cplx<R>) -> Result<(Vec<Cplx<R>>, Vec<Cplx<R>>)> {
        let (dz, dzb) = self.q_derivatives(z)?;
        let i = Cplx::new(R::zero(), R::one());
        let dr: Vec<Cplx<R>> = dz.iter().zip(&dzb).map(|(a, b)| a + b).collect();
        let di: Vec<Cplx<R>> = dz.iter().zip(&dzb).map(|(a, b)| (a - b) * i).collect();
        Ok((dr, di))
    }

    /// Scaling and residual certificate.
    pub fn certificate(&self, op: &DiscreteOperator<R>) -> BranchCertificate<R> {
        let grid = op.grid();
        let h = grid.spacing();
        // Norm-scaling fit over the decade [ρ_max/40, ρ_max/4].
        let lo = self.rho_max / R::of(40.0);
        let hi = self.rho_max / R::of(4.0);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &t) in self.t_samples.iter().enumerate().skip(1) {
            let rho = t.sqrt();
            if rho < lo || rho > hi {
                continue;
            }
            let qn = norm_real(h, &self.q_hat[i]) * rho;
            if qn > R::zero() {
                xs.push(rho.ln());
                ys.push(qn.ln());
            }
        }
        let slope = fit_slope(&xs, &ys);
        // Energy curvature: E(t) = e + c t + O(t²); Richardson from the two
        // smallest nonzero samples.
        let t1 = self.t_samples[1];
        let t2 = self.t_samples[2];
        let c1 = (self.energy[1] - self.e_linear) / t1;
        let c2 = (self.energy[2] - self.e_linear) / t2;
        // c(t) = c0 + c't: eliminate the linear error term.
        let c0 = (c1 * t2 - c2 * t1) / (t2 - t1);
        let quartic: R = (0..grid.len())
            .map(|k| grid.cubic_weight(k) * self.phi[k].powi(4))
            .sum::<R>()
            * h;
        let mut worst = R::zero();
        for (i, &t) in self.t_samples.iter().enumerate().skip(1) {
            let rho = t.sqrt();
            let qf: Vec<R> = self
                .phi
                .iter()
                .zip(&self.q_hat[i])
                .map(|(p, qh)| rho * (*p + *qh))
                .collect();
            worst = worst.max(branch_residual(op, &qf, self.energy[i]));
        }
        BranchCertificate {
            q_norm_exponent: slope,
            e_quad_coefficient: c0,
            phi_quartic: quartic,
            max_residual: worst,
        }
    }

    /// Orthogonality defect `max_i |⟨q̂_i, φ⟩|`.
    pub fn orthogonality_defect(&self) -> R {
        let mut worst = R::zero();
        for row in &self.q_hat {
            worst = worst.max(dot_real(self.h, row, &self.phi).abs());
        }
        worst
    }
}

fn fit_slope<R: Real>(xs: &[R], ys: &[R]) -> R {
    let m = R::of(xs.len() as f64);
    let sx: R = xs.iter().copied().sum();
    let sy: R = ys.iter().copied().sum();
    let sxx: R = xs.iter().map(|&x| x * x).sum();
    let sxy: R = xs.iter().zip(ys).map(|(&x, &y)| x * y).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Cross-mode projection identity along two branches: for `j ≠ k` and real
/// amplitudes, `e_j⟨q_k, φ_j⟩ + ⟨ν|Q_k|²Q_k, φ_j⟩ - E_k⟨q_k, φ_j⟩ = 0`
/// up to solver tolerance (projection of the standing-wave equation of
/// branch `k` onto mode `j`). Returns the residual scaled by the term size.
pub fn cross_mode_identity_residual<R: Real>(
    op: &DiscreteOperator<R>,
    fam_j: &BoundStateFamily<R>,
    fam_k: &BoundStateFamily<R>,
    rho_j: R,
    rho_k: R,
) -> Result<R> {
    let grid = op.grid();
    let h = grid.spacing();
    let (qk_full, e_k) = fam_k.real_profile(rho_k)?;
    let (_, e_j) = fam_j.real_profile(rho_j)?;
    let delta_e_j = e_j - fam_j.e_linear;
    let phi_j = &fam_j.phi;
    let qk_corr: Vec<R> = qk_full
        .iter()
        .zip(&fam_k.phi)
        .map(|(q, p)| *q - rho_k * *p)
        .collect();
    let overlap = dot_real(h, &qk_corr, phi_j);
    let cubic: R = (0..grid.len())
        .map(|k| grid.cubic_weight(k) * qk_full[k].powi(3) * phi_j[k])
        .sum::<R>()
        * h;
    // E_j⟨q_k, φ_j⟩ + ⟨ν|Q_k|²Q_k, φ_j⟩ - E_k⟨q_k, φ_j⟩ - δE_j⟨q_k, φ_j⟩.
    // The terms themselves are O(ρ⁴) small; normalize by one plus their
    // size so the result reads as an absolute defect at desk amplitudes.
    let lhs = e_j * overlap + cubic - e_k * overlap - delta_e_j * overlap;
    let scale = e_j.abs() * overlap.abs() + cubic.abs();
    Ok(lhs.abs() / (R::one() + scale))
}
