use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::argmax_finite;
use super::trace::{RegretTrace, TraceStep};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid_posterior::GridPosterior;
use crate::posterior::PosteriorState;
use crate::rkhs::{argmax_first, RkhsFunction};

/// Generator streams derived from one master seed.
pub(crate) const NOISE_STREAM: u64 = 1;
pub(crate) const EDP_STREAM: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    Normal,
    /// Uniform on `[-sqrt(3) sigma, sqrt(3) sigma]` (same variance as `Normal`).
    Uniform,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Normal => "normal",
            NoiseKind::Uniform => "uniform",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "gaussian" => Ok(NoiseKind::Normal),
            "uniform" => Ok(NoiseKind::Uniform),
            other => Err(Error::invalid(format!("unknown noise kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(NoiseModel { kind, sigma })
    }

    /// Noise generator for a run with master seed `seed`.
    pub fn sampler(&self, seed: u64) -> NoiseSampler {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        NoiseSampler { model: *self, rng }
    }
}

pub struct NoiseSampler {
    model: NoiseModel,
    rng: ChaCha8Rng,
}

impl NoiseSampler {
    pub fn draw(&mut self) -> f64 {
        let s = self.model.sigma;
        if s == 0.0 {
            return 0.0;
        }
        match self.model.kind {
            NoiseKind::Normal => Normal::new(0.0, s).expect("sigma > 0").sample(&mut self.rng),
            NoiseKind::Uniform => {
                let a = 3f64.sqrt() * s;
                self.rng.random_range(-a..=a)
            }
        }
    }
}

pub fn run_gp_ucb(config: &ExperimentConfig, f: &RkhsFunction, seed: u64) -> Result<RegretTrace> {
    run_gp_ucb_with(config, f, seed, Exec::default())
}

/// Algorithm loop over the configured candidate grid. Regret is measured against
/// the maximum over the evaluation grid, which contains the candidates.
pub fn run_gp_ucb_with(config: &ExperimentConfig, f: &RkhsFunction, seed: u64, exec: Exec) -> Result<RegretTrace> {
    if f.dim() != config.domain.dim() {
        return Err(Error::invalid("objective and domain dimensions differ"));
    }
    let spec = config.kernel.clone();
    let rho = config.rho;
    let candidates = config.candidate_points();
    let eval = config.eval_points();
    let f_eval = exec.map_range(eval.len(), |i| f.eval(eval.point(i)));
    let (star, f_star) = argmax_first(&f_eval).expect("evaluation grid is non-empty");
    // The evaluation grid starts with the candidates.
    let f_cand = &f_eval[..candidates.len()];
    let (best, f_best) = argmax_first(f_cand).expect("candidate grid is non-empty");
    let grid_gap = f_star - f_best;

    let mut noise = config.noise.sampler(seed);
    let mut state = PosteriorState::empty(spec.clone(), rho, candidates.dim())?;
    let mut grid = GridPosterior::new(spec, &candidates, 1, exec);
    let horizon = config.horizon;
    let mut steps = Vec::with_capacity(horizon);
    let mut flagged = Vec::with_capacity(horizon);
    let mut scores = vec![0.0; candidates.len()];
    let mut cum = 0.0;

    for t in 1..=horizon {
        let step = |e: Error| e.at_step(t);
        let beta = config.beta.value(t - 1, rho);
        let sb = beta.sqrt();
        for (i, s) in scores.iter_mut().enumerate() {
            *s = grid.mean(i, 0) + sb * grid.var(i).map_err(step)?.sqrt();
        }
        let c = argmax_finite(&scores).map_err(step)?;
        let x = candidates.point(c);
        let mu = grid.mean(c, 0);
        let sigma = grid.var(c).map_err(step)?.sqrt();
        let sd_best = grid.var(best).map_err(step)?.sqrt();
        flagged.push(
            (f_cand[best] - grid.mean(best, 0)).abs() <= sb * sd_best && (f_cand[c] - mu).abs() <= sb * sigma,
        );

        let y = f_cand[c] + noise.draw();
        let row = grid.whitened(c).to_vec();
        let diag = state.push_solved(x, y, row.clone()).map_err(step)?;
        let w = *state.whitened_observations().last().expect("just pushed");
        grid.observe(x, &row, diag, &[w]);

        let inst = f_star - f_cand[c];
        cum += inst;
        steps.push(TraceStep {
            t,
            x: x.to_vec(),
            y,
            beta,
            sigma,
            mu,
            inst_regret: inst,
            cum_regret: cum,
        });
    }

    Ok(RegretTrace {
        steps,
        f_star,
        x_star: eval.point(star).to_vec(),
        digest: config.digest(),
        seed,
        grid_gap,
        all_flagged: flagged.iter().all(|&b| b),
        flagged,
    })
}
