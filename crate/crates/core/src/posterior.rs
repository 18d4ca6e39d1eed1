//! Regularized GP posterior
//!
//! ```text
//! mu_t(x)    = k_t(x)^T (K_t + rho I)^{-1} y_t
//! sigma_t(x) = k(x, x) - k_t(x)^T (K_t + rho I)^{-1} k_t(x)
//! ```
//!
//! kept as a row-wise Cholesky factor `L L^T = K_t + rho I`. Rows are shared
//! between states through `Arc`, so an update costs one forward substitution
//! plus `O(t)` bookkeeping and never mutates the state it was derived from.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, KernelSpec};
use crate::points::PointSet;

/// Round-off window below zero that is clamped to zero variance.
pub const VARIANCE_CLAMP: f64 = 1e-12;

/// Eigenvalue floor for the `K_t^{-1}` term in [`PosteriorState::lemma2_chain_check`].
pub const LEMMA2_EIGEN_FLOOR: f64 = 1e-10;

const LEMMA2_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PosteriorState {
    spec: KernelSpec,
    rho: f64,
    dim: usize,
    points: Vec<Arc<[f64]>>,
    y: Vec<f64>,
    /// Row `j` of `L` holds `j + 1` entries; the last one is the diagonal.
    rows: Vec<Arc<[f64]>>,
    /// `L^{-1} y`
    whitened: Vec<f64>,
    alpha: OnceLock<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub var: f64,
}

impl Prediction {
    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }
}

impl PosteriorState {
    /// The prior: `mu_0 = 0`, `sigma_0^2 = 1`.
    pub fn empty(spec: KernelSpec, rho: f64, dim: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be > 0, got {rho}")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(PosteriorState {
            spec,
            rho,
            dim,
            points: Vec::new(),
            y: Vec::new(),
            rows: Vec::new(),
            whitened: Vec::new(),
            alpha: OnceLock::new(),
        })
    }

    /// Factorizes `K_t + rho I` for the given design from scratch.
    pub fn fit(spec: KernelSpec, rho: f64, points: &PointSet, y: &[f64]) -> Result<Self> {
        if points.len() != y.len() {
            return Err(Error::invalid(format!(
                "{} design points but {} observations",
                points.len(),
                y.len()
            )));
        }
        let mut state = Self::empty(spec, rho, points.dim())?;
        for (x, &yy) in points.iter().zip(y) {
            state.push(x, yy)?;
        }
        Ok(state)
    }

    /// State for the design extended by `(x_new, y_new)`.
    pub fn update(&self, x_new: &[f64], y_new: f64) -> Result<Self> {
        let mut next = self.clone();
        next.push(x_new, y_new)?;
        Ok(next)
    }

    fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.check_point(x)?;
        if !y.is_finite() {
            return Err(Error::invalid(format!("observation must be finite, got {y}")));
        }
        let row = self.whitened_row_unchecked(x);
        self.push_solved(x, y, row).map(|_| ())
    }

    /// Appends an observation whose whitened kernel row `L^{-1} k_t(x)` is already
    /// known. Returns the new diagonal entry of `L`.
    pub(crate) fn push_solved(&mut self, x: &[f64], y: f64, mut row: Vec<f64>) -> Result<f64> {
        debug_assert_eq!(row.len(), self.len());
        let t = self.len();
        let pivot = 1.0 + self.rho - dot(&row, &row);
        if !(pivot > 0.0) {
            return Err(Error::Factorization {
                index: t,
                value: pivot,
            });
        }
        let diag = pivot.sqrt();
        let w = (y - dot(&row, &self.whitened)) / diag;
        row.push(diag);
        self.rows.push(row.into());
        self.points.push(x.into());
        self.y.push(y);
        self.whitened.push(w);
        self.alpha = OnceLock::new();
        Ok(diag)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("point coordinates must be finite"));
        }
        Ok(())
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of observations `t`.
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    pub fn observations(&self) -> &[f64] {
        &self.y
    }

    /// Row `j` of the Cholesky factor (entries `0..=j`).
    pub fn chol_row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    pub fn chol_diag(&self, j: usize) -> f64 {
        self.rows[j][j]
    }

    /// `L^{-1} y`.
    pub fn whitened_observations(&self) -> &[f64] {
        &self.whitened
    }

    /// `(K_t + rho I)^{-1} y`, computed on first use.
    pub fn alpha(&self) -> &[f64] {
        self.alpha.get_or_init(|| {
            let mut a = self.whitened.clone();
            for j in (0..a.len()).rev() {
                let row = &self.rows[j];
                a[j] /= row[j];
                let aj = a[j];
                for (ai, lji) in a[..j].iter_mut().zip(&row[..j]) {
                    *ai -= lji * aj;
                }
            }
            a
        })
    }

    /// `k_t(x)`.
    pub fn kernel_vector(&self, x: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| self.spec.eval_unchecked(p, x))
            .collect()
    }

    /// Solves `L z = b` by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.len(), "right-hand side length");
        let mut z = Vec::with_capacity(b.len());
        for (i, row) in self.rows.iter().enumerate() {
            let zi = (b[i] - dot(&row[..i], &z)) / row[i];
            z.push(zi);
        }
        z
    }

    /// `L^{-1} k_t(x)`.
    pub fn whitened_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.whitened_row_unchecked(x))
    }

    fn whitened_row_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.solve_lower(&self.kernel_vector(x))
    }

    /// `mu_t(x) = k_t(x)^T alpha`; zero for the empty state.
    pub fn posterior_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if self.is_empty() {
            return Ok(0.0);
        }
        Ok(dot(&self.kernel_vector(x), self.alpha()))
    }

    /// `sigma_t^2(x) = 1 - |L^{-1} k_t(x)|^2`; one for the empty state.
    pub fn posterior_var(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        let v = self.whitened_row_unchecked(x);
        clamp_variance(1.0 - dot(&v, &v))
    }

    /// Mean and variance sharing one forward substitution; the mean is
    /// evaluated as `(L^{-1} k_t(x))^T (L^{-1} y)`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_point(x)?;
        let v = self.whitened_row_unchecked(x);
        Ok(Prediction {
            mean: dot(&v, &self.whitened),
            var: clamp_variance(1.0 - dot(&v, &v))?,
        })
    }

    /// `1/2 ln det(I + K_t / rho) = sum_j ln L_jj - (t/2) ln rho`.
    pub fn logdet_information(&self) -> f64 {
        let t = self.len() as f64;
        let sum_ln_diag: f64 = (0..self.len()).map(|j| self.chol_diag(j).ln()).sum();
        sum_ln_diag - 0.5 * t * self.rho.ln()
    }

    /// RKHS norms of the three functions compared in the interpolation-stability
    /// chain `|h2|^2 <= |h1|^2 <= 4 |h|`, for `Delta = k_t(x) - k_t(x2)`.
    pub fn lemma2_chain_check(&self, x: &[f64], x2: &[f64]) -> Result<Lemma2Report> {
        self.check_point(x)?;
        self.check_point(x2)?;
        if self.is_empty() {
            return Err(Error::invalid("lemma 2 chain needs at least one design point"));
        }
        let h_norm_sq = 2.0 * (1.0 - self.spec.eval_unchecked(x, x2));
        let delta: Vec<f64> = self
            .kernel_vector(x)
            .iter()
            .zip(self.kernel_vector(x2))
            .map(|(a, b)| a - b)
            .collect();

        let design = PointSet::from_rows(self.dim, &self.points)?;
        let k = kernel_matrix(&self.spec, &design)?;

        // u = (K + rho I)^{-1} Delta, then |h2|^2 = u^T K u
        let z = self.solve_lower(&delta);
        let mut u = z;
        for j in (0..u.len()).rev() {
            let row = &self.rows[j];
            u[j] /= row[j];
            let uj = u[j];
            for (ui, lji) in u[..j].iter_mut().zip(&row[..j]) {
                *ui -= lji * uj;
            }
        }
        let u = DVector::from_vec(u);
        let h2_norm_sq = (u.transpose() * &k * &u)[(0, 0)];

        let eig = k.symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let h1_norm_sq = (min_eig > LEMMA2_EIGEN_FLOOR).then(|| {
            let coords = eig.eigenvectors.transpose() * DVector::from_vec(delta.clone());
            coords
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(c, l)| c * c / l)
                .sum::<f64>()
        });

        let h_norm = h_norm_sq.max(0.0).sqrt();
        let holds = match h1_norm_sq {
            Some(h1) => h2_norm_sq <= h1 + LEMMA2_SLACK && h1 <= 4.0 * h_norm + LEMMA2_SLACK,
            None => h2_norm_sq <= 4.0 * h_norm + LEMMA2_SLACK,
        };
        Ok(Lemma2Report {
            h_norm_sq,
            h1_norm_sq,
            h2_norm_sq,
            min_eigenvalue: min_eig,
            holds,
        })
    }

    /// Dense `K_t + rho I` for the current design.
    pub fn regularized_gram(&self) -> Result<DMatrix<f64>> {
        let design = PointSet::from_rows(self.dim, &self.points)?;
        let mut k = kernel_matrix(&self.spec, &design)?;
        for j in 0..self.len() {
            k[(j, j)] += self.rho;
        }
        Ok(k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma2Report {
    pub h_norm_sq: f64,
    /// `None` when `K_t` is too ill-conditioned for the `K_t^{-1}` term.
    pub h1_norm_sq: Option<f64>,
    pub h2_norm_sq: f64,
    pub min_eigenvalue: f64,
    pub holds: bool,
}

pub(crate) fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v > -VARIANCE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance(v))
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize the reduction
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let k = 4 * i;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matern() -> KernelSpec {
        KernelSpec::matern(1.5, 0.5).unwrap()
    }

    fn random_design(rng: &mut ChaCha8Rng, t: usize, d: usize) -> (PointSet, Vec<f64>) {
        let coords = (0..t * d).map(|_| rng.random::<f64>()).collect();
        let y = (0..t).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        (PointSet::new(d, coords).unwrap(), y)
    }

    #[test]
    fn empty_state_is_prior() {
        let s = PosteriorState::empty(matern(), 1.0, 2).unwrap();
        assert_eq!(s.posterior_mean(&[0.2, 0.3]).unwrap(), 0.0);
        assert_eq!(s.posterior_var(&[0.2, 0.3]).unwrap(), 1.0);
        assert_eq!(s.logdet_information(), 0.0);
        assert!(PosteriorState::empty(matern(), 0.0, 1).is_err());
        assert!(PosteriorState::empty(matern(), -1.0, 1).is_err());
    }

    #[test]
    fn single_point_scalars() {
        let pts = PointSet::new(1, vec![0.3]).unwrap();
        let s = PosteriorState::fit(matern(), 1.0, &pts, &[2.0]).unwrap();
        assert_eq!(s.chol_diag(0), 2f64.sqrt());
        assert!((s.alpha()[0] - 1.0).abs() < 1e-15);
        assert!((s.posterior_mean(&[0.3]).unwrap() - 1.0).abs() < 1e-15);
        assert!((s.posterior_var(&[0.3]).unwrap() - 0.5).abs() < 1e-15);
        assert!((s.logdet_information() - 0.5 * 2f64.ln()).abs() < 1e-15);
        let u = PosteriorState::empty(matern(), 1.0, 1).unwrap().update(&[0.3], 2.0).unwrap();
        assert_eq!(u.chol_row(0), s.chol_row(0));
        assert_eq!(u.alpha(), s.alpha());
    }

    #[test]
    fn duplicate_points_logdet() {
        let pts = PointSet::new(1, vec![0.5, 0.5]).unwrap();
        let s = PosteriorState::fit(matern(), 1.0, &pts, &[0.0, 1.0]).unwrap();
        assert!((s.logdet_information() - 0.5 * 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn update_does_not_mutate_source() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (pts, y) = random_design(&mut rng, 5, 2);
        let s = PosteriorState::fit(matern(), 0.5, &pts, &y).unwrap();
        let before_mean = s.posterior_mean(&[0.1, 0.9]).unwrap();
        let next = s.update(&[0.1, 0.9], 3.0).unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(next.len(), 6);
        assert_eq!(s.posterior_mean(&[0.1, 0.9]).unwrap(), before_mean);
    }

    #[test]
    fn incremental_matches_refit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (pts, y) = random_design(&mut rng, 50, 2);
        let fitted = PosteriorState::fit(matern(), 0.3, &pts, &y).unwrap();
        let mut seq = PosteriorState::empty(matern(), 0.3, 2).unwrap();
        for (x, &yy) in pts.iter().zip(&y) {
            seq = seq.update(x, yy).unwrap();
        }
        for _ in 0..20 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let a = fitted.predict(&x).unwrap();
            let b = seq.predict(&x).unwrap();
            assert!((a.mean - b.mean).abs() < 1e-9);
            assert!((a.var - b.var).abs() < 1e-9);
            assert!((fitted.posterior_mean(&x).unwrap() - a.mean).abs() < 1e-9);
        }
    }

    #[test]
    fn alpha_solves_regularized_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (pts, y) = random_design(&mut rng, 40, 3);
        let s = PosteriorState::fit(matern(), 0.1, &pts, &y).unwrap();
        let k = s.regularized_gram().unwrap();
        let resid = &k * DVector::from_column_slice(s.alpha()) - DVector::from_column_slice(&y);
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(resid.amax() <= 1e-8 * (1.0 + ymax));
        for j in 0..s.len() {
            assert!(s.chol_diag(j) > 0.0);
        }
    }

    #[test]
    fn new_point_variance_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (pts, y) = random_design(&mut rng, 10, 1);
        let s = PosteriorState::fit(matern(), 0.2, &pts, &y).unwrap();
        let x = [0.77];
        let before = s.posterior_var(&x).unwrap();
        let after = s.update(&x, 0.0).unwrap().posterior_var(&x).unwrap();
        assert!(after < before);
    }

    #[test]
    fn variance_clamp_window() {
        assert_eq!(clamp_variance(-5e-13).unwrap(), 0.0);
        assert_eq!(clamp_variance(0.25).unwrap(), 0.25);
        assert!(matches!(clamp_variance(-1e-6), Err(Error::NegativeVariance(_))));
    }

    #[test]
    fn lemma2_zero_at_coincident_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (pts, y) = random_design(&mut rng, 10, 2);
        let s = PosteriorState::fit(matern(), 1.0, &pts, &y).unwrap();
        let r = s.lemma2_chain_check(&[0.4, 0.4], &[0.4, 0.4]).unwrap();
        assert_eq!(r.h_norm_sq, 0.0);
        assert_eq!(r.h2_norm_sq, 0.0);
        assert_eq!(r.h1_norm_sq, Some(0.0));
        assert!(r.holds);
    }

    #[test]
    fn lemma2_large_rho_kills_h2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (pts, y) = random_design(&mut rng, 10, 2);
        let small = PosteriorState::fit(matern(), 1.0, &pts, &y).unwrap();
        let big = PosteriorState::fit(matern(), 1e8, &pts, &y).unwrap();
        let (x, x2) = ([0.1, 0.2], [0.8, 0.6]);
        let a = small.lemma2_chain_check(&x, &x2).unwrap();
        let b = big.lemma2_chain_check(&x, &x2).unwrap();
        assert!(b.h2_norm_sq < 1e-12);
        assert_eq!(a.h1_norm_sq, b.h1_norm_sq);
        assert!(a.holds && b.holds);
    }

    #[test]
    fn lemma2_reports_singular_gram() {
        let pts = PointSet::new(1, vec![0.5, 0.5, 0.2]).unwrap();
        let s = PosteriorState::fit(matern(), 1.0, &pts, &[0.0, 0.0, 0.0]).unwrap();
        let r = s.lemma2_chain_check(&[0.1], &[0.9]).unwrap();
        assert!(r.h1_norm_sq.is_none());
        assert!(r.holds);
    }
}
