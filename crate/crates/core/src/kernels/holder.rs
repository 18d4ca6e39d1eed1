use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::KernelSpec;
use crate::error::{Error, Result};

/// Smallest radius sampled by [`holder_validate`].
pub const HOLDER_MIN_RADIUS: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    /// `min(nu, 1)` for Matérn, 1 for SE.
    pub theta: f64,
    /// Smallest `A0` with `Psi(0) - Psi(r) <= A0 r^theta` on every sampled radius.
    pub fitted_a0: f64,
    /// Largest ratio `(Psi(0) - Psi(r)) / r^theta` observed (equals `fitted_a0`).
    pub max_ratio: f64,
    /// Largest ratio among the smallest 10% of sampled radii.
    pub small_radius_max: f64,
    /// Largest ratio among the remaining 90% of sampled radii.
    pub bulk_max: f64,
    /// The ratio does not grow as `r -> 0`: `small_radius_max <= 1.1 * bulk_max`.
    pub bounded: bool,
}

/// Samples `n_samples` radii log-uniformly in `(1e-6, max_radius]` and fits the
/// Hölder constant of `Psi` at the origin.
pub fn holder_validate(
    spec: &KernelSpec,
    n_samples: usize,
    max_radius: f64,
    seed: u64,
) -> Result<HolderReport> {
    if n_samples < 100 {
        return Err(Error::invalid(format!("need at least 100 samples, got {n_samples}")));
    }
    if !(max_radius > HOLDER_MIN_RADIUS && max_radius.is_finite()) {
        return Err(Error::invalid(format!(
            "max_radius must exceed {HOLDER_MIN_RADIUS}, got {max_radius}"
        )));
    }
    let theta = spec.holder_exponent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (HOLDER_MIN_RADIUS.ln(), max_radius.ln());
    let mut radii: Vec<f64> = (0..n_samples)
        .map(|_| {
            let u: f64 = rng.random();
            // u in [0, 1) maps onto (lo, hi]
            (hi - (hi - lo) * u).exp()
        })
        .collect();
    radii.sort_by(f64::total_cmp);
    let ratios: Vec<f64> = radii
        .iter()
        .map(|&r| (1.0 - spec.psi(r)) / r.powf(theta))
        .collect();
    let decile = (n_samples / 10).max(1);
    let small_radius_max = ratios[..decile].iter().copied().fold(0.0, f64::max);
    let bulk_max = ratios[decile..].iter().copied().fold(0.0, f64::max);
    let fitted_a0 = small_radius_max.max(bulk_max);
    Ok(HolderReport {
        theta,
        fitted_a0,
        max_ratio: fitted_a0,
        small_radius_max,
        bulk_max,
        bounded: fitted_a0.is_finite() && small_radius_max <= 1.1 * bulk_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_constant_is_at_most_half_radius() {
        let se = KernelSpec::squared_exponential(1.0).unwrap();
        let rep = holder_validate(&se, 2000, 2.0, 1).unwrap();
        assert_eq!(rep.theta, 1.0);
        assert!(rep.fitted_a0 <= 2.0 / 2.0 + 1e-12);
        assert!(rep.bounded);
    }

    #[test]
    fn matern_theta() {
        assert_eq!(KernelSpec::matern(2.0, 1.0).unwrap().holder_exponent(), 1.0);
        let m = KernelSpec::matern(0.5, 1.0).unwrap();
        let rep = holder_validate(&m, 5000, 2.0, 3).unwrap();
        assert_eq!(rep.theta, 0.5);
        assert!(rep.bounded);
        // dense scan oracle: sup over r in (1e-6, 2] of (1 - e^{-sqrt2 r}) / sqrt(r)
        let dense = (0..200_000)
            .map(|i| {
                let r = (HOLDER_MIN_RADIUS.ln() + (2f64.ln() - HOLDER_MIN_RADIUS.ln()) * i as f64 / 199_999.0).exp();
                (1.0 - (-(2f64.sqrt()) * r).exp()) / r.sqrt()
            })
            .fold(0.0, f64::max);
        assert!(rep.fitted_a0 <= dense * (1.0 + 1e-9));
        assert!(rep.fitted_a0 > 0.95 * dense);
    }

    #[test]
    fn wrong_exponent_is_detected() {
        // nu = 0.3 has theta = 0.3; probing it with theta = 1 must diverge at small r.
        let m = KernelSpec::matern(0.3, 1.0).unwrap();
        let mut radii: Vec<f64> = (0..1000).map(|i| 1e-6 * 1.0138f64.powi(i)).collect();
        radii.retain(|r| *r <= 2.0);
        let small = (1.0 - m.psi(radii[0])) / radii[0];
        let big = (1.0 - m.psi(1.0)) / 1.0;
        assert!(small > 10.0 * big);
    }

    #[test]
    fn rejects_small_sample() {
        let se = KernelSpec::squared_exponential(1.0).unwrap();
        assert!(holder_validate(&se, 50, 2.0, 0).is_err());
        assert!(holder_validate(&se, 500, 0.0, 0).is_err());
    }
}
