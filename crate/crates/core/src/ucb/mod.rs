//! GP-UCB: exploration schedules, acquisition, the sampling loop and the
//! empirical-distribution-of-plays recommendation.

mod beta;
mod edp;
mod run;
mod trace;

pub use beta::{BetaKind, BetaSchedule};
pub use edp::{edp_recommend, EdpSampler};
pub use run::{run_gp_ucb, run_gp_ucb_with, NoiseKind, NoiseModel};
pub use trace::{RegretTrace, TraceStep};

use crate::error::{Error, Result};
use crate::points::PointSet;
use crate::posterior::PosteriorState;

/// Index of the candidate maximizing `mu_t(x) + sqrt(beta) sigma_t(x)`, lowest index on ties.
pub fn acquire(state: &PosteriorState, beta: f64, candidates: &PointSet) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidate set is empty"));
    }
    if !(beta >= 0.0) {
        return Err(Error::invalid(format!("beta must be >= 0, got {beta}")));
    }
    let sb = beta.sqrt();
    let scores = candidates
        .iter()
        .map(|x| state.predict(x).map(|p| p.mean + sb * p.sd()))
        .collect::<Result<Vec<_>>>()?;
    argmax_finite(&scores)
}

/// First index of the maximum; any non-finite score is an error naming its index.
pub(crate) fn argmax_finite(scores: &[f64]) -> Result<usize> {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::NonFiniteAcquisition(i));
        }
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::points::BoxDomain;

    fn spec() -> KernelSpec {
        KernelSpec::matern(1.5, 0.2).unwrap()
    }

    #[test]
    fn prior_surface_is_flat() {
        let state = PosteriorState::empty(spec(), 1.0, 1).unwrap();
        let grid = BoxDomain::unit(1).lattice(11);
        assert_eq!(acquire(&state, 2.0, &grid).unwrap(), 0);
    }

    #[test]
    fn zero_beta_exploits_mean() {
        let grid = BoxDomain::unit(1).lattice(11);
        let state = PosteriorState::empty(spec(), 0.1, 1)
            .unwrap()
            .update(&[0.7], 1.0)
            .unwrap();
        let best = acquire(&state, 0.0, &grid).unwrap();
        assert_eq!(grid.point(best), &[0.7]);
    }

    #[test]
    fn large_beta_explores_far_side() {
        let grid = BoxDomain::unit(1).lattice(11);
        let state = PosteriorState::empty(spec(), 1.0, 1)
            .unwrap()
            .update(&[0.1], 0.3)
            .unwrap();
        let best = acquire(&state, 1e6, &grid).unwrap();
        let brute = (0..grid.len())
            .max_by(|&a, &b| {
                let va = state.posterior_var(grid.point(a)).unwrap();
                let vb = state.posterior_var(grid.point(b)).unwrap();
                va.partial_cmp(&vb).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        assert_eq!(best, brute);
        assert_eq!(grid.point(best), &[1.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let state = PosteriorState::empty(spec(), 1.0, 1).unwrap();
        assert!(acquire(&state, 1.0, &PointSet::empty(1)).is_err());
        assert!(acquire(&state, -1.0, &BoxDomain::unit(1).lattice(3)).is_err());
        assert!(matches!(
            argmax_finite(&[0.0, f64::NAN]),
            Err(Error::NonFiniteAcquisition(1))
        ));
    }
}
