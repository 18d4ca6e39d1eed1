//! `report`: exponent fits and bound audits over a horizon sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gpucb::regret::{
    audit_trace, fit_power_law, fit_regret_exponent, geometric_checkpoints, greedy_info_gain, regret_bound_check,
    RateReference, AUDIT_GROWTH_SLACK, SE_GAMMA_RATIO_GROWTH,
};
use gpucb::textfmt::fmt_f64;
use gpucb::{Exec, KernelFamily};

use crate::layout::{self, RunDir};
use crate::CliError;

/// Greedy information gain is evaluated at these horizons on a dense lattice.
const GAMMA_T_MIN: usize = 64;
const GAMMA_T_MAX: usize = 1024;
const GAMMA_CANDIDATES: usize = 4096;
/// Required share of applicable traces satisfying the cumulative-regret inequality.
const BOUND_SHARE: f64 = 0.9;
const BIAS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub observed: f64,
    pub stderr: Option<f64>,
    pub reference: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub pass: bool,
    pub note: String,
}

impl CheckRow {
    fn new(check: &'static str, observed: f64, pass: bool) -> Self {
        CheckRow {
            check,
            observed,
            stderr: None,
            reference: None,
            lower: None,
            upper: None,
            pass,
            note: String::new(),
        }
    }

    fn status(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

pub struct Report {
    pub digest: String,
    pub rows: Vec<CheckRow>,
    pub text: String,
    pub all_pass: bool,
}

fn cell_dirs(out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if out.join(layout::CONFIG_FILE).is_file() {
        return Ok(vec![out.to_path_buf()]);
    }
    let entries = fs::read_dir(out).map_err(|e| CliError::Insufficient(format!("{}: {e}", out.display())))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(layout::CONFIG_FILE).is_file() && p.join(layout::SUMMARY_FILE).is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Reads a horizon sweep under `out`, writes `report.txt` and `report.csv`.
pub fn report_dir(out: &Path) -> Result<Report, CliError> {
    let mut cells = cell_dirs(out)?
        .iter()
        .map(|d| RunDir::open(d))
        .collect::<Result<Vec<_>, _>>()?;
    if cells.is_empty() {
        return Err(CliError::Insufficient(format!("{} holds no completed runs", out.display())));
    }
    cells.sort_by_key(|c| c.config.horizon);
    let longest = cells.last().expect("non-empty");
    let base = &longest.config;
    for c in &cells {
        if c.config.with_override("horizon", &base.horizon.to_string())? != *base {
            return Err(CliError::Insufficient(format!(
                "{} differs from the other cells in more than the horizon",
                c.path.display()
            )));
        }
    }
    let t_min = cells[0].config.horizon;
    let t_max = base.horizon;
    let traces = longest.traces()?;
    let fit = fit_regret_exponent(&traces, t_min, t_max)?;
    let d = base.domain.dim();
    let reference = RateReference::for_kernel(&base.kernel, d)?;
    let rho = base.rho;
    let mut rows = Vec::new();

    let (lo, hi) = reference.slope_window();
    rows.push(CheckRow {
        stderr: Some(fit.stderr),
        reference: Some(reference.cum_exponent),
        lower: Some(lo),
        upper: Some(hi),
        ..CheckRow::new("regret_exponent", fit.slope, reference.slope_ok(fit.slope))
    });

    let mut checkpoints: Vec<usize> = cells.iter().map(|c| c.config.horizon).collect();
    checkpoints.dedup();
    let eval = base.eval_points();
    let mut first = 0.0;
    let mut last = 0.0;
    let mut worst_bias: f64 = 0.0;
    for tr in &traces {
        let f = longest.objective(tr.seed)?;
        let audit = audit_trace(f, rho, tr, &eval, &checkpoints, Exec::default())?;
        first += audit[0].total_ratio / traces.len() as f64;
        last += audit[audit.len() - 1].total_ratio / traces.len() as f64;
        for a in &audit {
            worst_bias = worst_bias.max(a.bias_ratio / f.norm());
        }
    }
    let growth = last / first;
    let limit = AUDIT_GROWTH_SLACK * (((1.0 + rho * t_max as f64).ln()) / (1.0 + rho * t_min as f64).ln()).sqrt();
    rows.push(CheckRow {
        upper: Some(limit),
        note: format!("mean ratio {} at t={t_min}, {} at t={t_max}", fmt_f64(first), fmt_f64(last)),
        ..CheckRow::new("audit_ratio_growth", growth, growth <= limit)
    });
    rows.push(CheckRow {
        upper: Some(1.0 + BIAS_TOLERANCE),
        note: "max |f - mu~| / (|f| sigma) over noiseless replays".into(),
        ..CheckRow::new("bias_bound", worst_bias, worst_bias <= 1.0 + BIAS_TOLERANCE)
    });

    let checks = traces
        .iter()
        .map(|t| regret_bound_check(t, rho))
        .collect::<Result<Vec<_>, _>>()?;
    let applicable = checks.iter().filter(|c| c.applicable).count();
    let holding = checks.iter().filter(|c| c.applicable && c.holds).count();
    let share = if applicable == 0 { 1.0 } else { holding as f64 / applicable as f64 };
    rows.push(CheckRow {
        lower: Some(BOUND_SHARE),
        note: if applicable == 0 {
            "not applicable: no trace kept the uniform bound at every step".into()
        } else {
            format!("{holding} of {applicable} fully flagged traces")
        },
        ..CheckRow::new("regret_bound", share, share >= BOUND_SHARE)
    });

    let candidates = base.domain.lattice(GAMMA_CANDIDATES);
    let gamma_t = GAMMA_T_MAX.min(candidates.len());
    let gains = greedy_info_gain(&base.kernel, rho, &candidates, gamma_t, Exec::default())?;
    let gamma_points: Vec<(usize, f64)> = geometric_checkpoints(GAMMA_T_MIN, gamma_t)
        .into_iter()
        .map(|t| (t, gains[t - 1]))
        .collect();
    match reference.family {
        KernelFamily::SquaredExponential => {
            let ratio = |(t, g): (usize, f64)| g / (1.0 + t as f64).ln().powi(d as i32 + 1);
            let n = gamma_points.len();
            if n < 2 {
                return Err(CliError::Insufficient("too few information-gain checkpoints".into()));
            }
            let growth = ratio(gamma_points[n - 1]) / ratio(gamma_points[n - 2]);
            rows.push(CheckRow {
                upper: Some(SE_GAMMA_RATIO_GROWTH),
                note: format!("gamma_T / ln(1+T)^{} from T={} to T={}", d + 1, gamma_points[n - 2].0, gamma_points[n - 1].0),
                ..CheckRow::new("gamma_growth", growth, growth <= SE_GAMMA_RATIO_GROWTH)
            });
        }
        KernelFamily::Matern => {
            let gfit = fit_power_law(&gamma_points)?;
            let (lo, hi) = reference.gamma_window();
            rows.push(CheckRow {
                stderr: Some(gfit.stderr),
                reference: Some(reference.gamma_exponent),
                lower: Some(lo),
                upper: Some(hi),
                ..CheckRow::new("gamma_exponent", gfit.slope, gfit.slope >= lo && gfit.slope <= hi)
            });
        }
    }

    let digest = base.digest();
    let all_pass = rows.iter().all(|r| r.pass);
    let text = render_text(&digest, &rows);
    fs::write(out.join(layout::REPORT_FILE), render_records(&digest, &rows))?;
    fs::write(out.join(layout::REPORT_CSV), render_csv(&digest, &rows))?;
    Ok(Report {
        digest,
        rows,
        text,
        all_pass,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn render_text(digest: &str, rows: &[CheckRow]) -> String {
    let mut s = format!("report for config {digest}\n");
    for r in rows {
        write!(s, "{} {:<20} observed {:>10.4}", r.status(), r.check, r.observed).unwrap();
        if let Some(reference) = r.reference {
            write!(s, "  reference {reference:.4}").unwrap();
        }
        match (r.lower, r.upper) {
            (Some(lo), Some(hi)) => write!(s, "  window [{lo:.4}, {hi:.4}]").unwrap(),
            (Some(lo), None) => write!(s, "  min {lo:.4}").unwrap(),
            (None, Some(hi)) => write!(s, "  max {hi:.4}").unwrap(),
            (None, None) => {}
        }
        if !r.note.is_empty() {
            write!(s, "  ({})", r.note).unwrap();
        }
        s.push('\n');
    }
    s
}

fn render_records(digest: &str, rows: &[CheckRow]) -> String {
    let mut s = String::new();
    for r in rows {
        writeln!(s, "[{}]", r.check).unwrap();
        writeln!(s, "digest = {digest}").unwrap();
        writeln!(s, "observed = {}", fmt_f64(r.observed)).unwrap();
        for (k, v) in [("stderr", r.stderr), ("reference", r.reference), ("lower", r.lower), ("upper", r.upper)] {
            if let Some(v) = v {
                writeln!(s, "{k} = {}", fmt_f64(v)).unwrap();
            }
        }
        if !r.note.is_empty() {
            writeln!(s, "note = {}", r.note).unwrap();
        }
        writeln!(s, "status = {}\n", r.status()).unwrap();
    }
    s
}

fn render_csv(digest: &str, rows: &[CheckRow]) -> String {
    let mut s = String::from("check,digest,observed,stderr,reference,lower,upper,status\n");
    for r in rows {
        writeln!(
            s,
            "{},{digest},{},{},{},{},{},{}",
            r.check,
            fmt_f64(r.observed),
            opt(r.stderr),
            opt(r.reference),
            opt(r.lower),
            opt(r.upper),
            r.status()
        )
        .unwrap();
    }
    s
}
