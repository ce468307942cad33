//! Banded linear algebra for the pentadiagonal radial operators.
//!
//! Everything here is deliberately self-contained: a symmetric pentadiagonal
//! container, LU with partial pivoting for general (real or complex) banded
//! systems, LDLᵀ inertia counts, and a bisection + inverse-iteration
//! eigensolver. The dense symmetric eigensolver used as a cross-check in the
//! tests lives in the dev-dependencies, not here.

use crate::scalar::{Cplx, Real};
use num_traits::{NumAssign, Zero};

/// Element of a banded matrix: real or complex over an underlying real field.
pub trait Elem: Copy + NumAssign + Zero + std::ops::Neg<Output = Self> {
    type Field: Real;
    fn mag(self) -> Self::Field;
    fn from_real(x: Self::Field) -> Self;
}

impl<R: Real> Elem for R {
    type Field = R;
    fn mag(self) -> R {
        self.abs()
    }
    fn from_real(x: R) -> Self {
        x
    }
}

impl<R: Real> Elem for Cplx<R> {
    type Field = R;
    fn mag(self) -> R {
        // 1-norm magnitude; cheap and sufficient for pivoting.
        self.re.abs() + self.im.abs()
    }
    fn from_real(x: R) -> Self {
        Cplx::new(x, R::zero())
    }
}

/// Symmetric pentadiagonal matrix: variable diagonal, constant off-diagonals.
///
/// All discrete radial operators in this crate share this shape: the
/// second-derivative stencil fixes the off-diagonals and every physical
/// modification (potential, nonlinear terms, spectral shifts) acts on the
/// diagonal only.
#[derive(Debug, Clone)]
pub struct SymPenta<R: Real> {
    pub diag: Vec<R>,
    pub off1: R,
    pub off2: R,
}

impl<R: Real> SymPenta<R> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> R {
        let d = i.abs_diff(j);
        match d {
            0 => self.diag[i],
            1 => self.off1,
            2 => self.off2,
            _ => R::zero(),
        }
    }

    /// `y = A x` for complex `x`.
    pub fn apply(&self, x: &[Cplx<R>]) -> Vec<Cplx<R>> {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        let mut y = vec![Cplx::new(R::zero(), R::zero()); n];
        for k in 0..n {
            let mut acc = x[k] * self.diag[k];
            if k >= 1 {
                acc += x[k - 1] * self.off1;
            }
            if k + 1 < n {
                acc += x[k + 1] * self.off1;
            }
            if k >= 2 {
                acc += x[k - 2] * self.off2;
            }
            if k + 2 < n {
                acc += x[k + 2] * self.off2;
            }
            y[k] = acc;
        }
        y
    }

    pub fn apply_real(&self, x: &[R]) -> Vec<R> {
        let n = self.len();
        let mut y = vec![R::zero(); n];
        for k in 0..n {
            let mut acc = x[k] * self.diag[k];
            if k >= 1 {
                acc += x[k - 1] * self.off1;
            }
            if k + 1 < n {
                acc += x[k + 1] * self.off1;
            }
            if k >= 2 {
                acc += x[k - 2] * self.off2;
            }
            if k + 2 < n {
                acc += x[k + 2] * self.off2;
            }
            y[k] = acc;
        }
        y
    }

    /// Copy with `shift` subtracted from the diagonal (`A - shift`).
    pub fn shifted(&self, shift: R) -> SymPenta<R> {
        SymPenta {
            diag: self.diag.iter().map(|&d| d - shift).collect(),
            off1: self.off1,
            off2: self.off2,
        }
    }

    /// Gershgorin bounds on the spectrum.
    pub fn gershgorin(&self) -> (R, R) {
        let radius = R::of(2.0) * (self.off1.abs() + self.off2.abs());
        let mut lo = R::infinity();
        let mut hi = R::neg_infinity();
        for &d in &self.diag {
            lo = lo.min(d - radius);
            hi = hi.max(d + radius);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `sigma` (LDLᵀ inertia count).
    ///
    /// Pivots that underflow are nudged; bisection only needs the count to be
    /// right away from eigenvalues, which holds for generic shifts.
    pub fn count_below(&self, sigma: R) -> usize {
        let n = self.len();
        let scale = self.off1.abs() + self.off2.abs() + R::one();
        let tiny = R::of(1e-300).max(R::epsilon() * scale * R::of(1e-6));
        let mut d = vec![R::zero(); n];
        let mut l1 = vec![R::zero(); n];
        let mut l2 = vec![R::zero(); n];
        let mut negatives = 0usize;
        for k in 0..n {
            let mut dk = self.diag[k] - sigma;
            if k >= 1 {
                dk -= l1[k - 1] * l1[k - 1] * d[k - 1];
            }
            if k >= 2 {
                dk -= l2[k - 2] * l2[k - 2] * d[k - 2];
            }
            if dk.abs() < tiny {
                dk = if dk < R::zero() { -tiny } else { tiny };
            }
            if dk < R::zero() {
                negatives += 1;
            }
            d[k] = dk;
            if k + 1 < n {
                let mut a = self.off1;
                if k >= 1 {
                    a -= l1[k - 1] * l2[k - 1] * d[k - 1];
                }
                l1[k] = a / dk;
            }
            if k + 2 < n {
                l2[k] = self.off2 / dk;
            }
        }
        negatives
    }
}

// ---------------------------------------------------------------------------
// Banded LU with partial pivoting (bandwidths kl = ku = 2, fill-in to 4).
// ---------------------------------------------------------------------------

const KL: usize = 2;
const KU: usize = 2;
const KW: usize = 2 * KL + KU + 1; // working band height

/// LU factorization of a pentadiagonal matrix, partial pivoting.
pub struct BandLU<T> {
    n: usize,
    /// Band storage: `ab[row_band * n + col]`, row_band in `0..KW`,
    /// holding matrix entry `(i, j)` at `row_band = KL + KU + i - j`.
    ab: Vec<T>,
    ipiv: Vec<usize>,
}

impl<T: Elem> BandLU<T> {
    /// Factor the pentadiagonal matrix whose entry `(i, j)` is produced by `entry`.
    pub fn factor(n: usize, entry: impl Fn(usize, usize) -> T) -> Option<Self> {
        let mut ab = vec![T::zero(); KW * n];
        let idx = |band: usize, col: usize| band * n + col;
        for j in 0..n {
            let lo = j.saturating_sub(KU);
            let hi = (j + KL).min(n - 1);
            for i in lo..=hi {
                ab[idx(KL + KU + i - j, j)] = entry(i, j);
            }
        }
        let mut ipiv = vec![0usize; n];
        for k in 0..n {
            // Pivot search in column k among rows k..=k+KL.
            let rows = (n - 1 - k).min(KL);
            let mut p = 0usize;
            let mut best = ab[idx(KL + KU, k)].mag();
            for r in 1..=rows {
                let v = ab[idx(KL + KU + r, k)].mag();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            ipiv[k] = k + p;
            if best == T::Field::zero() {
                return None;
            }
            // Swap rows k and k+p across the band.
            if p != 0 {
                let width = (KL + KU).min(n - 1 - k);
                for c in 0..=width {
                    let j = k + c;
                    let a = idx(KL + KU - c, j);
                    let b = idx(KL + KU + p - c, j);
                    ab.swap(a, b);
                }
            }
            // Eliminate below.
            let piv = ab[idx(KL + KU, k)];
            for r in 1..=rows {
                let mut m = ab[idx(KL + KU + r, k)];
                m /= piv;
                ab[idx(KL + KU + r, k)] = m;
                let width = (KL + KU).min(n - 1 - k);
                for c in 1..=width {
                    let j = k + c;
                    let up = ab[idx(KL + KU - c, j)];
                    let lo_idx = idx(KL + KU + r - c, j);
                    let mut v = ab[lo_idx];
                    v -= m * up;
                    ab[lo_idx] = v;
                }
            }
        }
        Some(Self { n, ab, ipiv })
    }

    /// In-place solve `A x = b`.
    pub fn solve(&self, b: &mut [T]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let idx = |band: usize, col: usize| band * n + col;
        // Forward substitution with row swaps.
        for k in 0..n {
            let p = self.ipiv[k];
            if p != k {
                b.swap(k, p);
            }
            let rows = (n - 1 - k).min(KL);
            let bk = b[k];
            for r in 1..=rows {
                let m = self.ab[idx(KL + KU + r, k)];
                let mut v = b[k + r];
                v -= m * bk;
                b[k + r] = v;
            }
        }
        // Back substitution.
        for k in (0..n).rev() {
            let width = (KL + KU).min(n - 1 - k);
            let mut v = b[k];
            for c in 1..=width {
                let u = self.ab[idx(KL + KU - c, k + c)];
                let mut t = u;
                t *= b[k + c];
                v -= t;
            }
            v /= self.ab[idx(KL + KU, k)];
            b[k] = v;
        }
    }
}

// ---------------------------------------------------------------------------
// Symmetric banded eigensolver: bisection + inverse iteration.
// ---------------------------------------------------------------------------

/// Eigenvalues `λ_i` for `i` in `0..count`, each to absolute accuracy
/// `tol_abs`, by bisection.
pub fn bisect_eigenvalues<R: Real>(a: &SymPenta<R>, count: usize, tol_abs: R) -> Vec<R> {
    let (lo0, hi0) = a.gershgorin();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut lo = lo0;
        let mut hi = hi0;
        while hi - lo > tol_abs {
            let mid = (lo + hi) * R::of(0.5);
            if a.count_below(mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
            if !(hi - lo).is_finite() {
                break;
            }
        }
        out.push((lo + hi) * R::of(0.5));
    }
    out
}

/// Inverse iteration for the eigenvector at an isolated eigenvalue `lambda`.
///
/// `h` is the quadrature weight used for normalization; `orth` holds already
/// computed eigenvectors to re-orthogonalize against.
pub fn inverse_iteration<R: Real>(
    a: &SymPenta<R>,
    lambda: R,
    h: R,
    orth: &[Vec<R>],
) -> Option<(R, Vec<R>)> {
    let n = a.len();
    let scale = a.off1.abs() + a.off2.abs() + lambda.abs() + R::one();
    // Shift slightly off the eigenvalue so the factorization stays usable.
    let shift = lambda + scale * R::epsilon() * R::of(32.0);
    let lu = BandLU::<R>::factor(n, |i, j| a.entry(i, j) - if i == j { shift } else { R::zero() })?;
    // Deterministic pseudo-random start vector.
    let mut x: Vec<R> = (0..n)
        .map(|k| {
            let t = (k as f64 * 0.7390851332151607).fract() - 0.5;
            R::of(1.0 + t)
        })
        .collect();
    let mut rayleigh = lambda;
    for _ in 0..6 {
        lu.solve(&mut x);
        for v in orth {
            let c = crate::grid::dot_real(h, v, &x);
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk -= c * *vk;
            }
        }
        let nrm = crate::grid::norm_real(h, &x);
        if !(nrm > R::zero()) || !nrm.is_finite() {
            return None;
        }
        let inv = nrm.recip();
        for xk in x.iter_mut() {
            *xk *= inv;
        }
        let ax = a.apply_real(&x);
        rayleigh = crate::grid::dot_real(h, &x, &ax);
        let mut res = R::zero();
        for (axk, xk) in ax.iter().zip(&x) {
            let d = *axk - rayleigh * *xk;
            res += d * d;
        }
        if (res * h).sqrt() < scale * R::epsilon() * R::of(1e4) {
            break;
        }
    }
    // Deterministic sign: largest-magnitude component positive.
    let mut imax = 0;
    for (k, v) in x.iter().enumerate() {
        if v.abs() > x[imax].abs() {
            imax = k;
        }
    }
    if x[imax] < R::zero() {
        for v in x.iter_mut() {
            *v = -*v;
        }
    }
    Some((rayleigh, x))
}

/// Full symmetric-pentadiagonal eigendecomposition via bisection plus
/// inverse iteration. Returns `(values ascending, vectors)` normalized in
/// the `h`-weighted norm.
pub fn full_eigendecomposition<R: Real>(a: &SymPenta<R>, h: R) -> (Vec<R>, Vec<Vec<R>>) {
    let n = a.len();
    let (lo, hi) = a.gershgorin();
    let tol = (hi - lo) * R::epsilon() * R::of(8.0) + R::of(1e-13) * (hi.abs() + lo.abs());
    let values = bisect_eigenvalues(a, n, tol);
    let mut vectors: Vec<Vec<R>> = Vec::with_capacity(n);
    for (i, &lam) in values.iter().enumerate() {
        // Orthogonalize only against close-lying neighbours.
        let mut near: Vec<Vec<R>> = Vec::new();
        let cluster = (hi - lo) * R::of(1e-9);
        let mut j = i;
        while j > 0 && (lam - values[j - 1]).abs() < cluster {
            near.push(vectors[j - 1].clone());
            j -= 1;
        }
        let (_, v) = inverse_iteration(a, lam, h, &near)
            .unwrap_or_else(|| (lam, vec![R::zero(); n]));
        vectors.push(v);
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_penta() -> SymPenta<f64> {
        // Diagonally dominant test matrix.
        let n = 12;
        let diag: Vec<f64> = (0..n).map(|k| 4.0 + 0.3 * (k as f64).sin()).collect();
        SymPenta {
            diag,
            off1: -1.0,
            off2: 0.25,
        }
    }

    #[test]
    fn band_lu_solves_real_system() {
        let a = toy_penta();
        let n = a.len();
        let x_true: Vec<f64> = (0..n).map(|k| (k as f64 * 1.3).cos()).collect();
        let b = a.apply_real(&x_true);
        let lu = BandLU::<f64>::factor(n, |i, j| a.entry(i, j)).unwrap();
        let mut x = b;
        lu.solve(&mut x);
        for (xa, xb) in x.iter().zip(&x_true) {
            assert!((xa - xb).abs() < 1e-12);
        }
    }

    #[test]
    fn band_lu_solves_complex_system() {
        let a = toy_penta();
        let n = a.len();
        let entry = |i: usize, j: usize| {
            let mut v = Cplx::new(a.entry(i, j), 0.0);
            if i == j {
                v.im = 0.5 + 0.1 * i as f64;
            }
            v
        };
        let x_true: Vec<Cplx<f64>> = (0..n)
            .map(|k| Cplx::new((k as f64).sin(), (k as f64 * 0.5).cos()))
            .collect();
        // Apply the complex matrix directly.
        let mut b = vec![Cplx::new(0.0, 0.0); n];
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                b[i] += entry(i, j) * x_true[j];
            }
        }
        let lu = BandLU::<Cplx<f64>>::factor(n, entry).unwrap();
        let mut x = b;
        lu.solve(&mut x);
        for (xa, xb) in x.iter().zip(&x_true) {
            assert!((xa - xb).norm() < 1e-12);
        }
    }

    #[test]
    fn inertia_count_matches_dense() {
        let a = toy_penta();
        let n = a.len();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] = a.entry(i, j);
            }
        }
        let eig = dense.symmetric_eigen();
        let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for sigma in [2.0, 3.5, 4.0, 4.5, 6.0] {
            let dense_count = evs.iter().filter(|&&e| e < sigma).count();
            assert_eq!(a.count_below(sigma), dense_count, "sigma = {sigma}");
        }
    }

    #[test]
    fn bisection_and_inverse_iteration_match_dense() {
        let a = toy_penta();
        let n = a.len();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] = a.entry(i, j);
            }
        }
        let eig = dense.symmetric_eigen();
        let mut evs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        evs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mine = bisect_eigenvalues(&a, 4, 1e-12);
        for (m, d) in mine.iter().zip(&evs) {
            assert!((m - d).abs() < 1e-10, "{m} vs {d}");
        }
        let h = 0.1;
        let (lam, v) = inverse_iteration(&a, mine[0], h, &[]).unwrap();
        let av = a.apply_real(&v);
        for (avk, vk) in av.iter().zip(&v) {
            assert!((avk - lam * vk).abs() < 1e-9);
        }
    }
}
