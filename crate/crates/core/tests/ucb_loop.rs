use gpucb::grid_posterior::GridPosterior;
use gpucb::regret::{c2_constant, regret_bound_check};
use gpucb::ucb::{edp_recommend, EdpSampler};
use gpucb::{run_gp_ucb, run_gp_ucb_with, BoxDomain, Exec, ExperimentConfig, PointSet, PosteriorState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn config(extra: &str) -> ExperimentConfig {
    let base = "\
kernel.family = matern
kernel.nu = 1.5
kernel.lengthscale = 0.3
domain.dim = 1
domain.lower = 0
domain.upper = 1
rho = 1
noise.sigma = 0.1
horizon = 16
candidates.count = 64
objective.kind = random
objective.m = 8
objective.B = 1
seeds = 1
";
    let mut text = String::new();
    for line in base.lines() {
        let key = line.split('=').next().unwrap().trim();
        if !extra.lines().any(|l| l.split('=').next().unwrap().trim() == key) {
            text.push_str(line);
            text.push('\n');
        }
    }
    text.push_str(extra);
    ExperimentConfig::parse(&text, "test").unwrap()
}

#[test]
fn first_step_takes_the_first_candidate() {
    let cfg = config("horizon = 1\n");
    let f = cfg.objective_for_seed(1).unwrap();
    let trace = run_gp_ucb(&cfg, &f, 1).unwrap();
    let first = cfg.candidate_points();
    assert_eq!(trace.steps[0].x, first.point(0));
    assert_eq!(trace.steps[0].inst_regret, trace.f_star - f.eval(first.point(0)));
    assert_eq!(trace.steps[0].sigma, 1.0);
}

#[test]
fn same_seed_gives_identical_trace_bytes() {
    let cfg = config("");
    let f = cfg.objective_for_seed(4).unwrap();
    let a = run_gp_ucb(&cfg, &f, 4).unwrap();
    let b = run_gp_ucb_with(&cfg, &f, 4, Exec::Sequential).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let c = run_gp_ucb(&cfg, &f, 5).unwrap();
    assert_ne!(a.to_csv(), c.to_csv());
}

#[test]
fn noiseless_single_bump_average_regret_decays() {
    let cfg = config(
        "noise.sigma = 0\nhorizon = 256\nobjective.kind = explicit\n\
         objective.centers = 0.6031746031746031\nobjective.coeffs = 1\n",
    );
    let f = cfg.objective_for_seed(1).unwrap();
    let trace = run_gp_ucb(&cfg, &f, 1).unwrap();
    let max_inst = trace.steps.iter().map(|s| s.inst_regret).fold(0.0, f64::max);
    assert!(trace.steps[255].inst_regret <= max_inst);
    assert!(trace.cum_regret() / 256.0 < trace.steps[0].cum_regret);
    assert!(trace.flagged_violations().is_empty());
    let (lhs, rhs) = trace.cauchy_schwarz();
    assert!(lhs <= rhs + 1e-9);
}

#[test]
fn single_step_bound_reduces_to_scalar_arithmetic() {
    let cfg = config("horizon = 1\nnoise.sigma = 0\n");
    let f = cfg.objective_for_seed(2).unwrap();
    let trace = run_gp_ucb(&cfg, &f, 2).unwrap();
    let check = regret_bound_check(&trace, 1.0).unwrap();
    assert_eq!(check.lhs, trace.steps[0].inst_regret);
    let beta0 = trace.steps[0].beta;
    let expected = c2_constant(1.0) * (beta0 * 0.5 * 2f64.ln()).sqrt() + trace.grid_gap;
    assert!((check.rhs - expected).abs() < 1e-12, "{} vs {expected}", check.rhs);
}

#[test]
fn edp_on_a_single_step_returns_it() {
    let cfg = config("horizon = 1\n");
    let f = cfg.objective_for_seed(1).unwrap();
    let trace = run_gp_ucb(&cfg, &f, 1).unwrap();
    for seed in 0..20 {
        assert_eq!(edp_recommend(&trace, seed), trace.steps[0].x);
    }
}

#[test]
fn edp_draws_are_uniform_over_four_steps() {
    let cfg = config("horizon = 4\n");
    let f = cfg.objective_for_seed(1).unwrap();
    let trace = run_gp_ucb(&cfg, &f, 1).unwrap();
    let n = 100_000;
    let mut counts = [0usize; 4];
    let mut sampler = EdpSampler::new(9);
    for _ in 0..n {
        counts[sampler.draw(&trace)] += 1;
    }
    let expected = n as f64 / 4.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    assert!(stat < critical, "chi-square {stat} >= {critical}, counts {counts:?}");
}

#[test]
fn grid_tracker_matches_the_direct_posterior() {
    let cfg = config("");
    let spec = cfg.kernel.clone();
    let grid = BoxDomain::unit(1).lattice(50);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let design = BoxDomain::unit(1).sample_uniform(&mut rng, 12);
    let y: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).sin()).collect();
    for exec in [Exec::Sequential, Exec::default()] {
        let mut state = PosteriorState::empty(spec.clone(), 0.5, 1).unwrap();
        let mut tracker = GridPosterior::new(spec.clone(), &grid, 1, exec);
        for (x, &yy) in design.iter().zip(&y) {
            let row = state.whitened_row(x).unwrap();
            state = state.update(x, yy).unwrap();
            let j = state.len() - 1;
            tracker.observe(x, &row, state.chol_diag(j), &[state.whitened_observations()[j]]);
        }
        assert_eq!(tracker.observed(), 12);
        for (i, x) in grid.iter().enumerate() {
            let p = state.predict(x).unwrap();
            assert!((tracker.mean(i, 0) - p.mean).abs() < 1e-12);
            assert!((tracker.var(i).unwrap() - p.var).abs() < 1e-12);
        }
    }
}

#[test]
fn tracked_column_is_the_next_cholesky_row() {
    let cfg = config("");
    let grid: PointSet = BoxDomain::unit(1).lattice(9);
    let mut state = PosteriorState::empty(cfg.kernel.clone(), 1.0, 1).unwrap();
    let mut tracker = GridPosterior::new(cfg.kernel.clone(), &grid, 1, Exec::Sequential);
    for &i in &[3usize, 7, 0] {
        let x = grid.point(i);
        let row = state.whitened_row(x).unwrap();
        for (a, b) in row.iter().zip(tracker.whitened(i)) {
            assert!((a - b).abs() < 1e-14);
        }
        state = state.update(x, 0.0).unwrap();
        let j = state.len() - 1;
        tracker.observe(x, &row, state.chol_diag(j), &[state.whitened_observations()[j]]);
    }
}
