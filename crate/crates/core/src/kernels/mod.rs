//! Stationary correlation kernels: Matérn and squared exponential.
//!
//! Both families are normalized so that `Psi(0) = 1`. The Matérn kernel uses the
//! parametrization `z = 2 sqrt(nu) r / l`, for which the `nu -> infinity` limit
//! is the squared-exponential kernel with length-scale `l / sqrt(2)`.

pub mod bessel;
mod holder;

use std::fmt;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::points::PointSet;

pub use holder::{holder_validate, HolderReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Matern,
    SquaredExponential,
}

impl KernelFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Matern => "matern",
            KernelFamily::SquaredExponential => "se",
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "matern" => Ok(KernelFamily::Matern),
            "se" | "squared_exponential" | "rbf" => Ok(KernelFamily::SquaredExponential),
            other => Err(Error::invalid(format!("unknown kernel family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Profile {
    SquaredExponential {
        inv_two_l2: f64,
    },
    /// `nu = p + 1/2`: `Psi = e^{-z} poly(z)`, coefficients in ascending powers.
    MaternHalfInteger {
        scale: f64,
        poly: Vec<f64>,
    },
    Matern {
        scale: f64,
        ln_norm: f64,
    },
}

/// A stationary kernel `k(x, x') = Psi(x - x')` with `Psi(0) = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    nu: f64,
    lengthscale: f64,
    profile: Profile,
}

impl KernelSpec {
    pub fn matern(nu: f64, lengthscale: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid(format!("matern smoothness nu must be > 0, got {nu}")));
        }
        check_lengthscale(lengthscale)?;
        let scale = 2.0 * nu.sqrt() / lengthscale;
        let profile = match bessel::half_integer_index(nu) {
            Some(p) => Profile::MaternHalfInteger {
                scale,
                poly: half_integer_poly(p),
            },
            None => Profile::Matern {
                scale,
                ln_norm: -ln_gamma(nu) - (nu - 1.0) * std::f64::consts::LN_2,
            },
        };
        Ok(KernelSpec {
            family: KernelFamily::Matern,
            nu,
            lengthscale,
            profile,
        })
    }

    pub fn squared_exponential(lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(KernelSpec {
            family: KernelFamily::SquaredExponential,
            nu: f64::INFINITY,
            lengthscale,
            profile: Profile::SquaredExponential {
                inv_two_l2: 0.5 / (lengthscale * lengthscale),
            },
        })
    }

    /// Builds a spec from its family; `nu` is ignored for the squared exponential.
    pub fn new(family: KernelFamily, nu: f64, lengthscale: f64) -> Result<Self> {
        match family {
            KernelFamily::Matern => Self::matern(nu, lengthscale),
            KernelFamily::SquaredExponential => Self::squared_exponential(lengthscale),
        }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Smoothness; `+inf` for the squared exponential.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Hölder exponent of `Psi` at the origin: `min(nu, 1)` for Matérn, 1 for SE.
    pub fn holder_exponent(&self) -> f64 {
        match self.family {
            KernelFamily::Matern => self.nu.min(1.0),
            KernelFamily::SquaredExponential => 1.0,
        }
    }

    /// Radial profile `Psi` at Euclidean distance `r >= 0`.
    #[inline]
    pub fn psi(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::SquaredExponential { inv_two_l2 } => (-r * r * inv_two_l2).exp(),
            _ => self.psi_matern(r),
        }
    }

    /// `Psi` as a function of the squared distance.
    #[inline]
    pub fn psi_sq(&self, r2: f64) -> f64 {
        match &self.profile {
            Profile::SquaredExponential { inv_two_l2 } => (-r2 * inv_two_l2).exp(),
            _ => self.psi_matern(r2.sqrt()),
        }
    }

    fn psi_matern(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 1.0;
        }
        match &self.profile {
            Profile::MaternHalfInteger { scale, poly } => {
                let z = scale * r;
                let p = poly.iter().rev().fold(0.0, |acc, c| acc * z + c);
                ((-z).exp() * p).min(1.0)
            }
            Profile::Matern { scale, ln_norm } => {
                let z = scale * r;
                // z > 0 and nu > 0 are guaranteed, so the bessel call cannot fail
                let ln_k = bessel::ln_bessel_k(self.nu, z).unwrap_or(f64::NEG_INFINITY);
                (self.nu * z.ln() + ln_k + ln_norm).exp().min(1.0)
            }
            Profile::SquaredExponential { .. } => unreachable!(),
        }
    }

    /// `k(x, x2)`, validating dimensions and finiteness.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::invalid(format!(
                "kernel arguments have dimensions {} and {}",
                x.len(),
                x2.len()
            )));
        }
        if !x.iter().chain(x2).all(|v| v.is_finite()) {
            return Err(Error::invalid("kernel arguments must be finite"));
        }
        Ok(self.eval_unchecked(x, x2))
    }

    /// `k(x, x2)` without validation; callers guarantee equal lengths and finite input.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), x2.len());
        self.psi_sq(sq_dist(x, x2))
    }

    /// `(k(x, x_1), ..., k(x, x_t))`.
    pub fn kernel_vector(&self, points: &PointSet, x: &[f64]) -> Vec<f64> {
        points.iter().map(|p| self.eval_unchecked(p, x)).collect()
    }
}

fn check_lengthscale(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("lengthscale must be > 0, got {l}")))
    }
}

/// Coefficients `b_j` of `z^j` in `Psi = e^{-z} sum_j b_j z^j` for `nu = p + 1/2`.
fn half_integer_poly(p: u32) -> Vec<f64> {
    let fact = |n: u32| (1..=n).fold(1.0f64, |acc, k| acc * k as f64);
    let lead = fact(p) / fact(2 * p);
    let mut poly = vec![0.0; p as usize + 1];
    for i in 0..=p {
        let j = (p - i) as usize;
        poly[j] = lead * fact(p + i) / (fact(i) * fact(p - i)) * 2f64.powi((p - i) as i32);
    }
    poly
}

#[inline]
pub(crate) fn sq_dist(x: &[f64], x2: &[f64]) -> f64 {
    x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Gram matrix of `points`: exactly symmetric with unit diagonal.
pub fn kernel_matrix(spec: &KernelSpec, points: &PointSet) -> Result<DMatrix<f64>> {
    let t = points.len();
    if t == 0 {
        return Err(Error::invalid("kernel matrix needs at least one point"));
    }
    if !points.coords().iter().all(|v| v.is_finite()) {
        return Err(Error::invalid("kernel arguments must be finite"));
    }
    let mut k = DMatrix::<f64>::identity(t, t);
    for j in 0..t {
        for l in (j + 1)..t {
            let v = spec.eval_unchecked(points.point(j), points.point(l));
            k[(j, l)] = v;
            k[(l, j)] = v;
        }
    }
    Ok(k)
}
