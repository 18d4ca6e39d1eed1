//! Objective functions with exactly known RKHS norm: finite kernel expansions
//! `f(x) = sum_j c_j Psi(x - x_j)` with `|f|^2 = c^T K c`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, KernelFamily, KernelSpec};
use crate::points::{BoxDomain, PointSet};
use crate::textfmt::{fmt_f64, fmt_list, KeyValues};

/// Tolerance on negative round-off in `c^T K c`.
const NORM_SQ_FLOOR: f64 = -1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RkhsFunction {
    spec: KernelSpec,
    centers: PointSet,
    coeffs: Vec<f64>,
    norm: f64,
    seed: Option<u64>,
}

/// Quadratic form `c^T K c` for the centers' Gram matrix.
pub fn norm_sq(spec: &KernelSpec, centers: &PointSet, coeffs: &[f64]) -> Result<f64> {
    let k = kernel_matrix(spec, centers)?;
    let c = nalgebra::DVector::from_column_slice(coeffs);
    Ok((c.transpose() * k * &c)[(0, 0)])
}

impl RkhsFunction {
    pub fn new(spec: KernelSpec, centers: PointSet, coeffs: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::invalid("an RKHS expansion needs at least one center"));
        }
        if centers.len() != coeffs.len() {
            return Err(Error::invalid(format!(
                "{} centers but {} coefficients",
                centers.len(),
                coeffs.len()
            )));
        }
        if !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("coefficients must be finite"));
        }
        let n2 = norm_sq(&spec, &centers, &coeffs)?;
        if n2 < NORM_SQ_FLOOR {
            return Err(Error::NegativeVariance(n2));
        }
        Ok(RkhsFunction {
            spec,
            centers,
            coeffs,
            norm: n2.max(0.0).sqrt(),
            seed: None,
        })
    }

    /// `m` centers uniform in `domain`, standard-normal coefficients, rescaled to norm `b`.
    /// A zero-norm draw is retried with `seed + 1`.
    pub fn sample(spec: KernelSpec, m: usize, b: f64, domain: &BoxDomain, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("target norm must be > 0, got {b}")));
        }
        let mut s = seed;
        loop {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let centers = domain.sample_uniform(&mut rng, m);
            let coeffs: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
            let f = Self::new(spec.clone(), centers, coeffs)?;
            if f.norm > 0.0 {
                let mut scaled = f.scale_to_norm(b)?;
                scaled.seed = Some(s);
                return Ok(scaled);
            }
            s = s.wrapping_add(1);
        }
    }

    /// Multiplies the coefficients by `b / |f|`.
    pub fn scale_to_norm(&self, b: f64) -> Result<Self> {
        if !(self.norm > 0.0) {
            return Err(Error::invalid("cannot rescale a function with zero norm"));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::invalid(format!("target norm must be > 0, got {b}")));
        }
        let s = b / self.norm;
        let coeffs: Vec<f64> = self.coeffs.iter().map(|c| c * s).collect();
        let mut f = Self::new(self.spec.clone(), self.centers.clone(), coeffs)?;
        f.seed = self.seed;
        Ok(f)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn centers(&self) -> &PointSet {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "point dimension");
        self.centers
            .iter()
            .zip(&self.coeffs)
            .map(|(c, w)| w * self.spec.eval_unchecked(c, x))
            .sum()
    }

    /// Exhaustive argmax over `grid`, lowest index on ties.
    pub fn grid_maximum(&self, grid: &PointSet) -> Result<(usize, f64)> {
        let values: Vec<f64> = grid.iter().map(|x| self.eval(x)).collect();
        argmax_first(&values).ok_or_else(|| Error::invalid("grid must be non-empty"))
    }

    /// Structured text record (family, nu, lengthscale, centers, coefficients, seed).
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("kernel.family = {}\n", self.spec.family()));
        if self.spec.family() == KernelFamily::Matern {
            s.push_str(&format!("kernel.nu = {}\n", fmt_f64(self.spec.nu())));
        }
        s.push_str(&format!("kernel.lengthscale = {}\n", fmt_f64(self.spec.lengthscale())));
        s.push_str(&format!("dim = {}\n", self.dim()));
        s.push_str(&format!("m = {}\n", self.coeffs.len()));
        match self.seed {
            Some(seed) => s.push_str(&format!("seed = {seed}\n")),
            None => s.push_str("seed = none\n"),
        }
        s.push_str(&format!("norm = {}\n", fmt_f64(self.norm)));
        s.push_str(&format!("centers = {}\n", fmt_list(self.centers.coords())));
        s.push_str(&format!("coeffs = {}\n", fmt_list(&self.coeffs)));
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text, "objective record")?;
        let family: KernelFamily = kv.get("kernel.family")?;
        let nu = if family == KernelFamily::Matern { kv.get("kernel.nu")? } else { f64::INFINITY };
        let spec = KernelSpec::new(family, nu, kv.get("kernel.lengthscale")?)?;
        let dim: usize = kv.get("dim")?;
        let centers = PointSet::new(dim, kv.get_list("centers")?)?;
        let coeffs: Vec<f64> = kv.get_list("coeffs")?;
        let mut f = Self::new(spec, centers, coeffs)?;
        f.seed = match kv.required("seed")? {
            "none" => None,
            v => Some(kv.parse_value("seed", v)?),
        };
        Ok(f)
    }
}

/// Index and value of the first maximum; `None` for an empty slice.
pub(crate) fn argmax_first(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matern() -> KernelSpec {
        KernelSpec::matern(1.5, 0.3).unwrap()
    }

    #[test]
    fn single_center() {
        let c = PointSet::new(2, vec![0.2, 0.7]).unwrap();
        let f = RkhsFunction::new(matern(), c, vec![1.0]).unwrap();
        assert_eq!(f.norm(), 1.0);
        assert_eq!(f.eval(&[0.2, 0.7]), 1.0);
    }

    #[test]
    fn two_centers_norm() {
        let c = PointSet::new(1, vec![0.1, 0.5]).unwrap();
        let f = RkhsFunction::new(matern(), c, vec![1.0, -1.0]).unwrap();
        let psi = matern().psi(0.4);
        assert!((f.norm() * f.norm() - 2.0 * (1.0 - psi)).abs() < 1e-15);
    }

    #[test]
    fn zero_function() {
        let c = PointSet::new(1, vec![0.1, 0.5]).unwrap();
        let f = RkhsFunction::new(matern(), c, vec![0.0, 0.0]).unwrap();
        assert_eq!(f.eval(&[0.3]), 0.0);
        assert!(f.scale_to_norm(1.0).is_err());
        let grid = BoxDomain::unit(1).lattice(11);
        assert_eq!(f.grid_maximum(&grid).unwrap(), (0, 0.0));
    }

    #[test]
    fn scaling_halves_coefficients() {
        let c = PointSet::new(1, vec![0.0, 0.0]).unwrap();
        let f = RkhsFunction::new(matern(), c, vec![1.0, 1.0]).unwrap();
        assert_eq!(f.norm(), 2.0);
        let g = f.scale_to_norm(1.0).unwrap();
        assert_eq!(g.coeffs(), &[0.5, 0.5]);
        assert_eq!(g.norm(), 1.0);
    }

    #[test]
    fn nearest_grid_point_wins_single_center() {
        let c = PointSet::new(1, vec![0.33]).unwrap();
        let f = RkhsFunction::new(matern(), c, vec![1.0]).unwrap();
        let grid = BoxDomain::unit(1).lattice(11);
        let (i, v) = f.grid_maximum(&grid).unwrap();
        assert_eq!(grid.point(i), &[0.3]);
        assert_eq!(v, f.eval(&[0.3]));
        let single = PointSet::new(1, vec![0.9]).unwrap();
        assert_eq!(f.grid_maximum(&single).unwrap().0, 0);
        assert!(f.grid_maximum(&PointSet::empty(1)).is_err());
    }

    #[test]
    fn sample_is_deterministic_and_normalized() {
        let dom = BoxDomain::unit(2);
        let a = RkhsFunction::sample(matern(), 15, 2.5, &dom, 42).unwrap();
        let b = RkhsFunction::sample(matern(), 15, 2.5, &dom, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.norm() - 2.5).abs() < 1e-10 * 2.5);
        assert!(a.centers().iter().all(|c| dom.contains(c)));
        assert_eq!(a.seed(), Some(42));
        let grid = dom.lattice(2500);
        assert!(grid.iter().all(|x| a.eval(x).abs() <= a.norm() + 1e-9));
    }

    #[test]
    fn record_roundtrip() {
        let dom = BoxDomain::unit(2);
        let f = RkhsFunction::sample(matern(), 7, 1.0, &dom, 9).unwrap();
        let g = RkhsFunction::from_record(&f.to_record()).unwrap();
        assert_eq!(f, g);
        let se = RkhsFunction::sample(KernelSpec::squared_exponential(0.5).unwrap(), 3, 1.0, &dom, 1).unwrap();
        assert_eq!(RkhsFunction::from_record(&se.to_record()).unwrap(), se);
    }
}
