//! Uniform radial grid for the s-wave sector of `-Δ + V` on ℝ³.
//!
//! A radial field `ψ(r)` is stored through `w(r) = √(4π) · r · ψ(r)` sampled
//! on nodes `r_k = k·h`, `k = 1..=n`, with `h = r_max / n`. The reduced wave
//! `w` obeys `w(0) = 0` and a Dirichlet cutoff one node past `r_max`. In this
//! representation the ℝ³ inner product of radial fields is the plain 1-d
//! integral `∫ w₁ w₂ dr`, and the cubic term `|ψ|²ψ` becomes `ν(r)|w|²w`
//! with `ν(r) = 1/(4π r²)`.

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Uniform grid on `(0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid<R: Real> {
    r_max: R,
    n_points: usize,
    spacing: R,
}

impl<R: Real> RadialGrid<R> {
    /// Build a grid with `n_points` nodes `k·h ∈ (0, r_max]`, `h = r_max/n_points`.
    pub fn new(r_max: R, n_points: usize) -> Result<Self> {
        if n_points < 64 {
            return Err(Error::Config(format!(
                "n_points = {n_points} < 64: grid too coarse"
            )));
        }
        if !(r_max > R::zero()) {
            return Err(Error::Config("r_max must be positive".into()));
        }
        let spacing = r_max / R::of(n_points as f64);
        Ok(Self {
            r_max,
            n_points,
            spacing,
        })
    }

    pub fn r_max(&self) -> R {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> R {
        self.spacing
    }

    /// Node position `r_k = (k+1)·h` for the 0-based storage index `k`.
    #[inline]
    pub fn node(&self, k: usize) -> R {
        self.spacing * R::of((k + 1) as f64)
    }

    pub fn nodes(&self) -> Vec<R> {
        (0..self.n_points).map(|k| self.node(k)).collect()
    }

    /// Weight of the cubic term at node `k`: `ν(r_k) = 1/(4π r_k²)`.
    #[inline]
    pub fn cubic_weight(&self, k: usize) -> R {
        let r = self.node(k);
        (R::of(4.0) * R::PI() * r * r).recip()
    }

    /// Grid with identical extent and doubled resolution.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.r_max, self.n_points * 2)
    }
}

/// Radial potential `V(r)`, rapidly decaying at the grid edge.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Potential {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

impl Potential {
    /// Free particle, `V ≡ 0`.
    pub fn zero() -> Self {
        Self {
            name: "zero".into(),
            params: BTreeMap::new(),
        }
    }

    /// Single Gaussian well `V(r) = -depth · exp(-(r/width)²)`.
    pub fn gaussian_well(depth: f64, width: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("depth".into(), depth);
        params.insert("width".into(), width);
        Self {
            name: "gaussian".into(),
            params,
        }
    }

    /// Sum of two Gaussian wells centred at `0` and `sep`:
    /// `V(r) = -d1·exp(-(r/w1)²) - d2·exp(-((r-sep)/w2)²)`.
    pub fn two_gaussian_wells(d1: f64, w1: f64, d2: f64, w2: f64, sep: f64) -> Self {
        let mut params = BTreeMap::new();
        params.insert("depth1".into(), d1);
        params.insert("width1".into(), w1);
        params.insert("depth2".into(), d2);
        params.insert("width2".into(), w2);
        params.insert("sep".into(), sep);
        Self {
            name: "two_gaussian".into(),
            params,
        }
    }

    fn p(&self, key: &str) -> f64 {
        *self.params.get(key).unwrap_or(&0.0)
    }

    /// Evaluate `V(r)`.
    pub fn eval<R: Real>(&self, r: R) -> R {
        let x = r.to_f64_lossy();
        let v = match self.name.as_str() {
            "zero" => 0.0,
            "gaussian" => {
                let w = self.p("width").max(1e-300);
                -self.p("depth") * (-(x / w).powi(2)).exp()
            }
            "two_gaussian" => {
                let w1 = self.p("width1").max(1e-300);
                let w2 = self.p("width2").max(1e-300);
                -self.p("depth1") * (-(x / w1).powi(2)).exp()
                    - self.p("depth2") * (-((x - self.p("sep")) / w2).powi(2)).exp()
            }
            other => panic!("unknown potential kind {other:?}"),
        };
        R::of(v)
    }

    /// Check that `|V|` has fallen below `floor` at the grid edge.
    pub fn check_decay<R: Real>(&self, grid: &RadialGrid<R>, floor: R) -> Result<()> {
        let tail = self.eval::<R>(grid.r_max()).abs();
        if tail > floor {
            return Err(Error::Config(format!(
                "potential {:?} not decayed at r_max: |V({})| = {:.3e} > floor {:.3e}",
                self.name,
                grid.r_max(),
                tail.to_f64_lossy(),
                floor.to_f64_lossy()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Grid-function helpers. Fields are plain `Vec<Cplx<R>>` (or `Vec<R>` when
// real); the inner products below carry the `h` quadrature weight.
// ---------------------------------------------------------------------------

/// Bilinear pairing `⟨f, g⟩ = ∫ f g dr` (no conjugation).
pub fn dot<R: Real>(h: R, f: &[Cplx<R>], g: &[Cplx<R>]) -> Cplx<R> {
    debug_assert_eq!(f.len(), g.len());
    let mut acc = Cplx::new(R::zero(), R::zero());
    for (a, b) in f.iter().zip(g) {
        acc += a * b;
    }
    acc * h
}

/// Hermitian inner product `(f, g) = ∫ f̄ g dr`.
pub fn inner<R: Real>(h: R, f: &[Cplx<R>], g: &[Cplx<R>]) -> Cplx<R> {
    debug_assert_eq!(f.len(), g.len());
    let mut acc = Cplx::new(R::zero(), R::zero());
    for (a, b) in f.iter().zip(g) {
        acc += a.conj() * b;
    }
    acc * h
}

/// Real bilinear pairing for real fields.
pub fn dot_real<R: Real>(h: R, f: &[R], g: &[R]) -> R {
    debug_assert_eq!(f.len(), g.len());
    let mut acc = R::zero();
    for (a, b) in f.iter().zip(g) {
        acc += *a * *b;
    }
    acc * h
}

/// L² norm `‖f‖ = (∫ |f|² dr)^{1/2}`.
pub fn norm<R: Real>(h: R, f: &[Cplx<R>]) -> R {
    let mut acc = R::zero();
    for a in f {
        acc += a.norm_sqr();
    }
    (acc * h).sqrt()
}

pub fn norm_real<R: Real>(h: R, f: &[R]) -> R {
    dot_real(h, f, f).sqrt()
}

/// Weighted norm `‖⟨r⟩^p f‖` used for decay diagnostics (`p` may be negative).
pub fn weighted_norm<R: Real>(grid: &RadialGrid<R>, p: R, f: &[Cplx<R>]) -> R {
    let h = grid.spacing();
    let mut acc = R::zero();
    for (k, a) in f.iter().enumerate() {
        let r = grid.node(k);
        let w = (R::one() + r * r).powf(p);
        acc += a.norm_sqr() * w * w;
    }
    (acc * h).sqrt()
}

pub fn to_complex<R: Real>(f: &[R]) -> Vec<Cplx<R>> {
    f.iter().map(|&x| Cplx::new(x, R::zero())).collect()
}

pub fn axpy<R: Real>(y: &mut [Cplx<R>], a: Cplx<R>, x: &[Cplx<R>]) {
    for (yk, xk) in y.iter_mut().zip(x) {
        *yk += a * xk;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_cover_extent() {
        let g = RadialGrid::<f64>::new(10.0, 100).unwrap();
        assert_eq!(g.len(), 100);
        assert!((g.node(99) - 10.0).abs() < 1e-14);
        assert!((g.node(0) - 0.1).abs() < 1e-14);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn grid_rejects_coarse() {
        assert!(RadialGrid::<f64>::new(10.0, 32).is_err());
    }

    #[test]
    fn potential_decay_check() {
        let g = RadialGrid::<f64>::new(8.0, 128).unwrap();
        let narrow = Potential::gaussian_well(4.0, 1.0);
        narrow.check_decay(&g, 1e-10).unwrap();
        let wide = Potential::gaussian_well(4.0, 6.0);
        assert!(wide.check_decay(&g, 1e-10).is_err());
    }

    #[test]
    fn pairings_are_consistent() {
        let h = 0.1f64;
        let f = vec![Cplx::new(1.0, 2.0), Cplx::new(-0.5, 0.25)];
        let g = vec![Cplx::new(0.5, -1.0), Cplx::new(2.0, 0.0)];
        let bl = dot(h, &f, &g);
        let hm = inner(h, &f, &g);
        let fbar: Vec<_> = f.iter().map(|c| c.conj()).collect();
        assert!((dot(h, &fbar, &g) - hm).norm() < 1e-15);
        assert!((bl.re - 0.15).abs() < 1e-15);
        assert!((bl.im - 0.05).abs() < 1e-15);
    }

    #[test]
    fn generic_instantiation_f32() {
        let g = RadialGrid::<f32>::new(5.0, 64).unwrap();
        assert!((g.cubic_weight(0) - 1.0 / (4.0 * std::f32::consts::PI * g.node(0).powi(2))).abs() < 1e-6);
    }
}
