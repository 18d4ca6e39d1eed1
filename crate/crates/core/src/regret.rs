//! Information gain, audits of the uniform error bound and of the cumulative
//! regret inequality, and power-law fits of regret curves.

use std::collections::HashMap;
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::grid_posterior::GridPosterior;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::points::PointSet;
use crate::posterior::{dot, PosteriorState};
use crate::rkhs::RkhsFunction;
use crate::ucb::{BetaSchedule, RegretTrace};

/// Accepted deviation of a fitted cumulative-regret slope from the reference, Matérn kernels.
pub const MATERN_SLOPE_BAND: (f64, f64) = (-0.125, 0.175);
/// Fitted Matérn slopes at or above this value are not sublinear enough.
pub const MATERN_SLOPE_CEILING: f64 = 0.9;
/// Accepted deviation for the squared-exponential kernel (reference 1/2).
pub const SE_SLOPE_BAND: (f64, f64) = (-0.05, 0.25);
/// Accepted deviation of the greedy information-gain exponent.
pub const GAMMA_SLOPE_BAND: (f64, f64) = (-0.10, 0.15);
/// Largest admitted growth of `gamma_T / ln(1+T)^(d+1)` between consecutive checkpoints (SE).
pub const SE_GAMMA_RATIO_GROWTH: f64 = 1.10;
/// Slack factor on the audited ratio growth relative to `sqrt(ln(1 + rho t))`.
pub const AUDIT_GROWTH_SLACK: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateReference {
    pub family: KernelFamily,
    pub nu: f64,
    pub d: usize,
    pub cum_exponent: f64,
    pub simple_exponent: f64,
    /// Polynomial exponent of `gamma_T`; zero for SE, whose growth is `ln(1+T)^(d+1)`.
    pub gamma_exponent: f64,
}

pub fn rate_reference(family: KernelFamily, nu: f64, d: usize) -> Result<RateReference> {
    if d == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    let df = d as f64;
    let (cum, gamma) = match family {
        KernelFamily::SquaredExponential => (0.5, 0.0),
        KernelFamily::Matern if nu.is_infinite() && nu > 0.0 => (0.5, 0.0),
        KernelFamily::Matern => {
            if !(nu > 0.0) {
                return Err(Error::invalid(format!("nu must be > 0, got {nu}")));
            }
            ((nu + df) / (2.0 * nu + df), df / (2.0 * nu + df))
        }
    };
    Ok(RateReference {
        family,
        nu,
        d,
        cum_exponent: cum,
        simple_exponent: cum - 1.0,
        gamma_exponent: gamma,
    })
}

impl RateReference {
    pub fn for_kernel(spec: &KernelSpec, d: usize) -> Result<Self> {
        rate_reference(spec.family(), spec.nu(), d)
    }

    /// Accepted interval for a fitted cumulative-regret slope.
    pub fn slope_window(&self) -> (f64, f64) {
        let (lo, hi) = match self.family {
            KernelFamily::Matern => MATERN_SLOPE_BAND,
            KernelFamily::SquaredExponential => SE_SLOPE_BAND,
        };
        (self.cum_exponent + lo, self.cum_exponent + hi)
    }

    pub fn slope_ok(&self, slope: f64) -> bool {
        let (lo, hi) = self.slope_window();
        let sublinear = self.family != KernelFamily::Matern || slope < MATERN_SLOPE_CEILING;
        slope >= lo && slope <= hi && sublinear
    }

    pub fn gamma_window(&self) -> (f64, f64) {
        (self.gamma_exponent + GAMMA_SLOPE_BAND.0, self.gamma_exponent + GAMMA_SLOPE_BAND.1)
    }
}

/// Greedy surrogate of the maximal information gain: points are added without
/// replacement, each maximizing `ln(1 + sigma^2 / rho)`. Returns `gamma_1..gamma_T`.
pub fn greedy_info_gain(
    spec: &KernelSpec,
    rho: f64,
    candidates: &PointSet,
    horizon: usize,
    exec: Exec,
) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::invalid(format!("rho must be > 0, got {rho}")));
    }
    if candidates.len() < horizon {
        return Err(Error::invalid(format!(
            "greedy selection of {horizon} points needs at least as many candidates, got {}",
            candidates.len()
        )));
    }
    let mut grid = GridPosterior::new(spec.clone(), candidates, 1, exec);
    let mut taken = vec![false; candidates.len()];
    let mut gains = Vec::with_capacity(horizon);
    let mut total = 0.0;
    for _ in 0..horizon {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..candidates.len() {
            if taken[i] {
                continue;
            }
            let v = grid.var(i)?;
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        let (c, var) = best.expect("enough candidates");
        taken[c] = true;
        total += 0.5 * (var / rho).ln_1p();
        gains.push(total);
        let row = grid.whitened(c).to_vec();
        grid.observe(candidates.point(c), &row, (rho + var).sqrt(), &[0.0]);
    }
    Ok(gains)
}

/// `1/2 sum ln(1 + sigma_{t-1}^2(x_t) / rho)` over the recorded steps, which equals
/// `1/2 ln det(I + K_T / rho)` for the trace's own design.
pub fn trace_information(trace: &RegretTrace, rho: f64) -> f64 {
    0.5 * trace.steps.iter().map(|s| (s.sigma * s.sigma / rho).ln_1p()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub information: f64,
    /// The check only applies when the uniform bound held at every step.
    pub applicable: bool,
    pub holds: bool,
}

pub fn c2_constant(rho: f64) -> f64 {
    (8.0 / (1.0 / rho).ln_1p()).sqrt()
}

/// `R_T <= C2 sqrt(T beta_{T-1} I_T) + T g` with `C2 = sqrt(8 / ln(1 + 1/rho))`,
/// `I_T` the trace's own information and `g` its grid gap.
pub fn regret_bound_check(trace: &RegretTrace, rho: f64) -> Result<BoundCheck> {
    let last = trace
        .steps
        .last()
        .ok_or_else(|| Error::Insufficient("empty trace".into()))?;
    let t = trace.horizon() as f64;
    let information = trace_information(trace, rho);
    let rhs = c2_constant(rho) * (t * last.beta * information).sqrt() + t * trace.grid_gap;
    let lhs = last.cum_regret;
    let applicable = trace.all_flagged;
    Ok(BoundCheck {
        lhs,
        rhs,
        information,
        applicable,
        holds: !applicable || lhs <= rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditPoint {
    pub t: usize,
    /// `max |f - mu_t| / sigma_t` with the observed (noisy) responses.
    pub total_ratio: f64,
    /// The same with noiseless responses `y = f(x)`.
    pub bias_ratio: f64,
    /// `max |mu_t - mu~_t| / sigma_t`, the part due to noise.
    pub noise_ratio: f64,
}

/// Replays a design with its observed responses and with noiseless ones, and at
/// each checkpoint `t` reports the worst standardized errors over `grid`.
/// Design points on the grid reuse the tracked whitened columns; others are solved.
pub fn uniform_bound_audit(
    f: &RkhsFunction,
    rho: f64,
    design: &PointSet,
    y: &[f64],
    grid: &PointSet,
    checkpoints: &[usize],
    exec: Exec,
) -> Result<Vec<AuditPoint>> {
    if design.len() != y.len() {
        return Err(Error::invalid("design and responses differ in length"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("audit grid is empty"));
    }
    let horizon = design.len();
    if let Some(&t) = checkpoints.iter().find(|&&t| t > horizon) {
        return Err(Error::Insufficient(format!("checkpoint {t} exceeds the {horizon} replayed steps")));
    }
    let spec = f.spec().clone();
    let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let index: HashMap<Vec<u64>, usize> = grid.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
    let f_grid = exec.map_range(grid.len(), |i| f.eval(grid.point(i)));
    let mut tracker = GridPosterior::new(spec.clone(), grid, 2, exec);
    let mut state = PosteriorState::empty(spec, rho, grid.dim())?;
    let mut wf: Vec<f64> = Vec::with_capacity(horizon);
    let mut out = Vec::new();

    for t in 0..=horizon {
        if checkpoints.contains(&t) {
            let ratios = exec.map_range(grid.len(), |i| -> Result<[f64; 3]> {
                let s = tracker.var(i)?.sqrt();
                let (my, mf) = (tracker.mean(i, 0), tracker.mean(i, 1));
                Ok([(f_grid[i] - my).abs() / s, (f_grid[i] - mf).abs() / s, (my - mf).abs() / s])
            });
            let mut worst = [0.0f64; 3];
            for r in ratios {
                let r = r?;
                for k in 0..3 {
                    worst[k] = worst[k].max(r[k]);
                }
            }
            out.push(AuditPoint {
                t,
                total_ratio: worst[0],
                bias_ratio: worst[1],
                noise_ratio: worst[2],
            });
        }
        if t == horizon {
            break;
        }
        let x = design.point(t);
        let row = match index.get(&key(x)) {
            Some(&i) => tracker.whitened(i).to_vec(),
            None => state.whitened_row(x)?,
        };
        let diag = state.push_solved(x, y[t], row.clone()).map_err(|e| e.at_step(t + 1))?;
        let wy = *state.whitened_observations().last().expect("just pushed");
        let wf_new = (f.eval(x) - dot(&row, &wf)) / diag;
        wf.push(wf_new);
        tracker.observe(x, &row, diag, &[wy, wf_new]);
    }
    Ok(out)
}

/// [`uniform_bound_audit`] over the design and responses recorded in a trace.
pub fn audit_trace(
    f: &RkhsFunction,
    rho: f64,
    trace: &RegretTrace,
    grid: &PointSet,
    checkpoints: &[usize],
    exec: Exec,
) -> Result<Vec<AuditPoint>> {
    let mut design = PointSet::empty(f.dim());
    for s in &trace.steps {
        design.push(&s.x)?;
    }
    let y: Vec<f64> = trace.steps.iter().map(|s| s.y).collect();
    uniform_bound_audit(f, rho, &design, &y, grid, checkpoints, exec)
}

/// Sets `c0` to the 95th percentile (nearest rank) of `r_t / sqrt(growth(t))`
/// over pilot audit points, where `beta_t = c0^2 growth(t)`.
pub fn calibrate_c0(pilot: &[AuditPoint], schedule: &BetaSchedule, rho: f64) -> Result<f64> {
    let mut scaled: Vec<f64> = pilot
        .iter()
        .filter(|a| a.t >= 1)
        .map(|a| a.total_ratio / schedule.growth(a.t, rho).sqrt())
        .collect();
    if scaled.is_empty() {
        return Err(Error::Insufficient("no pilot checkpoints with t >= 1".into()));
    }
    scaled.sort_by(f64::total_cmp);
    let rank = ((0.95 * scaled.len() as f64).ceil() as usize).clamp(1, scaled.len());
    Ok(scaled[rank - 1])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    /// NaN with fewer than three fitted points.
    pub stderr: f64,
    pub intercept: f64,
    /// `(t, mean value)` pairs used in the fit.
    pub points: Vec<(usize, f64)>,
    /// Checkpoints dropped because the mean was not positive.
    pub excluded: Vec<usize>,
}

/// Unweighted least squares of `ln value` on `ln t`; non-positive values are excluded.
pub fn fit_power_law(samples: &[(usize, f64)]) -> Result<ExponentFit> {
    let (points, excluded): (Vec<_>, Vec<_>) = samples.iter().partition(|(_, v)| *v > 0.0);
    let excluded: Vec<usize> = excluded.into_iter().map(|(t, _)| t).collect();
    if points.len() < 2 {
        return Err(Error::Insufficient(format!(
            "{} usable checkpoints, need at least 2",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(t, _)| (*t as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Insufficient("checkpoints must be distinct".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if points.len() > 2 {
        let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(ExponentFit {
        slope,
        stderr,
        intercept,
        points,
        excluded,
    })
}

/// `t_min, 2 t_min, 4 t_min, ...` up to `t_max`.
pub fn geometric_checkpoints(t_min: usize, t_max: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut t = t_min.max(1);
    while t <= t_max {
        out.push(t);
        t *= 2;
    }
    out
}

/// Fits the slope of the mean cumulative regret over `traces` at geometric
/// checkpoints in `[t_min, t_max]`.
pub fn fit_regret_exponent(traces: &[RegretTrace], t_min: usize, t_max: usize) -> Result<ExponentFit> {
    if traces.len() < 5 {
        return Err(Error::Insufficient(format!("{} traces, need at least 5", traces.len())));
    }
    if t_min == 0 || t_max < 4 * t_min {
        return Err(Error::Insufficient(format!(
            "checkpoint range [{t_min}, {t_max}] must satisfy t_max >= 4 t_min"
        )));
    }
    if let Some(short) = traces.iter().find(|tr| tr.horizon() < t_max) {
        return Err(Error::Insufficient(format!(
            "trace with seed {} has {} steps, need {t_max}",
            short.seed,
            short.horizon()
        )));
    }
    let samples: Vec<(usize, f64)> = geometric_checkpoints(t_min, t_max)
        .into_iter()
        .map(|t| {
            let mean = traces.iter().map(|tr| tr.steps[t - 1].cum_regret).sum::<f64>() / traces.len() as f64;
            (t, mean)
        })
        .collect();
    fit_power_law(&samples)
}

/// `sqrt(ln(1 + rho t) ln(e + 6 pi^-2 c t^2 / delta))` evaluated as in the schedule.
pub fn schedule_scale(t: usize, rho: f64, c_subg: f64, delta: f64) -> f64 {
    let t = t.max(1) as f64;
    ((1.0 + rho * t).ln() * (E + 6.0 / (PI * PI) * c_subg * t * t / delta).ln()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::BoxDomain;
    use crate::ucb::TraceStep;

    fn power_trace(seed: u64, horizon: usize, curve: impl Fn(f64) -> f64) -> RegretTrace {
        let steps = (1..=horizon)
            .map(|t| TraceStep {
                t,
                x: vec![0.0],
                y: 0.0,
                beta: 1.0,
                sigma: 1.0,
                mu: 0.0,
                inst_regret: 0.0,
                cum_regret: curve(t as f64),
            })
            .collect();
        RegretTrace {
            steps,
            f_star: 0.0,
            x_star: vec![0.0],
            digest: String::new(),
            seed,
            grid_gap: 0.0,
            flagged: Vec::new(),
            all_flagged: true,
        }
    }

    #[test]
    fn references() {
        let r = rate_reference(KernelFamily::Matern, 1.5, 1).unwrap();
        assert_eq!(r.cum_exponent, 0.625);
        assert_eq!(r.gamma_exponent, 0.25);
        assert_eq!(r.simple_exponent, -0.375);
        let r = rate_reference(KernelFamily::Matern, 2.5, 1).unwrap();
        assert!((r.cum_exponent - 3.5 / 6.0).abs() < 1e-15);
        let big = rate_reference(KernelFamily::Matern, 1e9, 1).unwrap();
        assert!((big.cum_exponent - 0.5).abs() < 1e-8);
        let se = rate_reference(KernelFamily::SquaredExponential, f64::INFINITY, 2).unwrap();
        assert_eq!(se.cum_exponent, 0.5);
        assert_eq!(se.slope_window(), (0.45, 0.75));
        let m = rate_reference(KernelFamily::Matern, 1.5, 1).unwrap();
        assert_eq!(m.slope_window(), (0.5, 0.8));
        assert!(m.slope_ok(0.7) && !m.slope_ok(0.9) && !m.slope_ok(0.45));
    }

    #[test]
    fn exact_power_law() {
        let traces: Vec<_> = (0..5).map(|s| power_trace(s, 4096, |t| t.powf(0.7))).collect();
        let fit = fit_regret_exponent(&traces, 256, 4096).unwrap();
        assert!((fit.slope - 0.7).abs() < 1e-9);
        assert_eq!(fit.points.len(), 5);
    }

    #[test]
    fn polylog_inflates_slope() {
        let traces: Vec<_> = (0..5).map(|s| power_trace(s, 4096, |t| t.sqrt() * t.ln())).collect();
        let fit = fit_regret_exponent(&traces, 256, 4096).unwrap();
        // Closed-form OLS of ln(sqrt(t) ln t) at t = 2^8..2^12.
        assert!((fit.slope - 0.6459431618637299).abs() < 1e-12, "{}", fit.slope);
    }

    #[test]
    fn constant_regret_and_preconditions() {
        let traces: Vec<_> = (0..5).map(|s| power_trace(s, 64, |_| 3.0)).collect();
        assert!(fit_regret_exponent(&traces, 4, 64).unwrap().slope.abs() < 1e-12);
        assert!(fit_regret_exponent(&traces[..4], 4, 64).is_err());
        assert!(fit_regret_exponent(&traces, 4, 15).is_err());
        assert!(fit_regret_exponent(&traces, 4, 128).is_err());
        let zeros: Vec<_> = (0..5).map(|s| power_trace(s, 64, |t| if t < 10.0 { 0.0 } else { t })).collect();
        let fit = fit_regret_exponent(&zeros, 4, 64).unwrap();
        assert_eq!(fit.excluded, vec![4, 8]);
    }

    #[test]
    fn greedy_first_step_and_monotone() {
        let spec = KernelSpec::matern(1.5, 0.2).unwrap();
        let cand = BoxDomain::unit(1).lattice(40);
        let g = greedy_info_gain(&spec, 0.5, &cand, 20, Exec::Sequential).unwrap();
        assert!((g[0] - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[0] <= w[1]));
        assert!(greedy_info_gain(&spec, 0.5, &cand, 41, Exec::Sequential).is_err());
    }

    #[test]
    fn schedule_scale_matches_beta() {
        let s = BetaSchedule::default();
        for t in [1, 7, 300] {
            assert!((schedule_scale(t, 0.5, 1.0, 0.1).powi(2) - s.value(t, 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_percentile() {
        let s = BetaSchedule::default();
        let pilot: Vec<AuditPoint> = (1..=20)
            .map(|k| AuditPoint {
                t: 1,
                total_ratio: k as f64 * s.growth(1, 1.0).sqrt(),
                bias_ratio: 0.0,
                noise_ratio: 0.0,
            })
            .collect();
        assert!((calibrate_c0(&pilot, &s, 1.0).unwrap() - 19.0).abs() < 1e-12);
    }
}
