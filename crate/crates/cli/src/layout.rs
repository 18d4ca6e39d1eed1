//! On-disk layout of a run directory:
//! `config.txt`, `objective.txt`, `trace_seed<k>.csv`, `summary.csv`, and after
//! `report`, `report.txt` and `report.csv`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gpucb::textfmt::fmt_f64;
use gpucb::ucb::RegretTrace;
use gpucb::{ExperimentConfig, RkhsFunction};

use crate::CliError;

pub const CONFIG_FILE: &str = "config.txt";
pub const OBJECTIVE_FILE: &str = "objective.txt";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const REPORT_CSV: &str = "report.csv";

pub fn trace_file(seed: u64) -> String {
    format!("trace_seed{seed}.csv")
}

const SUMMARY_COLUMNS: &str = "digest,seed,horizon,f_star,grid_gap,all_flagged,flagged_steps,cum_regret,status,error";

/// One row of `summary.csv`; sweeps prefix the sweep axis and value.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub cell: Option<(String, String)>,
    pub digest: String,
    pub seed: u64,
    pub horizon: Option<usize>,
    pub f_star: Option<f64>,
    pub grid_gap: Option<f64>,
    pub all_flagged: Option<bool>,
    pub flagged_steps: Option<usize>,
    pub cum_regret: Option<f64>,
    pub error: Option<String>,
}

impl SummaryRow {
    pub fn from_trace(trace: &RegretTrace) -> Self {
        SummaryRow {
            cell: None,
            digest: trace.digest.clone(),
            seed: trace.seed,
            horizon: Some(trace.horizon()),
            f_star: Some(trace.f_star),
            grid_gap: Some(trace.grid_gap),
            all_flagged: Some(trace.all_flagged),
            flagged_steps: Some(trace.flagged.iter().filter(|&&f| f).count()),
            cum_regret: Some(trace.cum_regret()),
            error: None,
        }
    }

    pub fn failed(digest: &str, seed: u64, error: &str) -> Self {
        SummaryRow {
            cell: None,
            digest: digest.to_string(),
            seed,
            horizon: None,
            f_star: None,
            grid_gap: None,
            all_flagged: None,
            flagged_steps: None,
            cum_regret: None,
            error: Some(error.replace([',', '\n'], ";")),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let with_cell = rows.iter().any(|r| r.cell.is_some());
    let mut out = String::new();
    if with_cell {
        out.push_str("axis,value,");
    }
    out.push_str(SUMMARY_COLUMNS);
    out.push('\n');
    let opt_f = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        if with_cell {
            let (a, v) = r.cell.clone().unwrap_or_default();
            write!(out, "{a},{v},").unwrap();
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.digest,
            r.seed,
            opt(r.horizon.map(|h| h.to_string())),
            opt_f(r.f_star),
            opt_f(r.grid_gap),
            opt(r.all_flagged.map(|b| b.to_string())),
            opt(r.flagged_steps.map(|n| n.to_string())),
            opt_f(r.cum_regret),
            if r.ok() { "ok" } else { "failed" },
            r.error.clone().unwrap_or_default(),
        )
        .unwrap();
    }
    out
}

pub fn parse_summary(text: &str) -> Result<Vec<SummaryRow>, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Insufficient("empty summary.csv".into()))?;
    let with_cell = header.starts_with("axis,value,");
    let bad = |line: &str| CliError::Insufficient(format!("malformed summary row `{line}`"));
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let mut f: Vec<&str> = line.split(',').collect();
        let cell = if with_cell {
            if f.len() < 2 {
                return Err(bad(line));
            }
            let c = (f[0].to_string(), f[1].to_string());
            f.drain(..2);
            Some(c)
        } else {
            None
        };
        if f.len() != 10 {
            return Err(bad(line));
        }
        let num = |s: &str| -> Result<Option<f64>, CliError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(line))
            }
        };
        let int = |s: &str| -> Result<Option<usize>, CliError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(line))
            }
        };
        rows.push(SummaryRow {
            cell,
            digest: f[0].to_string(),
            seed: f[1].parse().map_err(|_| bad(line))?,
            horizon: int(f[2])?,
            f_star: num(f[3])?,
            grid_gap: num(f[4])?,
            all_flagged: match f[5] {
                "" => None,
                v => Some(v == "true"),
            },
            flagged_steps: int(f[6])?,
            cum_regret: num(f[7])?,
            error: (f[8] != "ok").then(|| f[9].to_string()),
        });
    }
    Ok(rows)
}

/// One record for a shared objective, otherwise one `[seed k]` section per seed.
pub fn objectives_text(objectives: &[(u64, RkhsFunction)], shared: bool) -> String {
    if shared {
        return objectives.first().map(|(_, f)| f.to_record()).unwrap_or_default();
    }
    let mut out = String::new();
    for (seed, f) in objectives {
        writeln!(out, "[seed {seed}]").unwrap();
        out.push_str(&f.to_record());
    }
    out
}

/// Parses `objective.txt`; a key of `None` is the objective shared by all seeds.
pub fn parse_objectives(text: &str) -> Result<BTreeMap<Option<u64>, RkhsFunction>, CliError> {
    let mut out = BTreeMap::new();
    let mut current: Option<u64> = None;
    let mut body = String::new();
    let mut flush = |seed: Option<u64>, body: &mut String| -> Result<(), CliError> {
        if !body.trim().is_empty() {
            out.insert(seed, RkhsFunction::from_record(body)?);
        }
        body.clear();
        Ok(())
    };
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix("[seed ") {
            flush(current, &mut body)?;
            let seed = rest
                .trim_end_matches(']')
                .trim()
                .parse()
                .map_err(|_| CliError::Insufficient(format!("bad objective section `{line}`")))?;
            current = Some(seed);
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    flush(current, &mut body)?;
    Ok(out)
}

/// A completed run directory read back from disk.
pub struct RunDir {
    pub path: PathBuf,
    pub config: ExperimentConfig,
    pub summary: Vec<SummaryRow>,
    objectives: BTreeMap<Option<u64>, RkhsFunction>,
}

impl RunDir {
    pub fn open(path: &Path) -> Result<Self, CliError> {
        let read = |name: &str| {
            fs::read_to_string(path.join(name))
                .map_err(|e| CliError::Insufficient(format!("{}: {e}", path.join(name).display())))
        };
        let config_path = path.join(CONFIG_FILE);
        let config = ExperimentConfig::parse(&read(CONFIG_FILE)?, &config_path.display().to_string())
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(RunDir {
            path: path.to_path_buf(),
            config,
            summary: parse_summary(&read(SUMMARY_FILE)?)?,
            objectives: parse_objectives(&read(OBJECTIVE_FILE)?)?,
        })
    }

    pub fn objective(&self, seed: u64) -> Result<&RkhsFunction, CliError> {
        self.objectives
            .get(&Some(seed))
            .or_else(|| self.objectives.get(&None))
            .ok_or_else(|| CliError::Insufficient(format!("no objective for seed {seed}")))
    }

    /// Traces of the successful seeds, with metadata restored from the summary.
    pub fn traces(&self) -> Result<Vec<RegretTrace>, CliError> {
        let mut out = Vec::new();
        for row in self.summary.iter().filter(|r| r.ok()) {
            let file = self.path.join(trace_file(row.seed));
            let text = fs::read_to_string(&file)
                .map_err(|e| CliError::Insufficient(format!("{}: {e}", file.display())))?;
            let steps = RegretTrace::parse_csv(&text)?;
            let f = self.objective(row.seed)?;
            let eval = self.config.eval_points();
            let (star, f_star) = f.grid_maximum(&eval)?;
            out.push(RegretTrace {
                steps,
                f_star: row.f_star.unwrap_or(f_star),
                x_star: eval.point(star).to_vec(),
                digest: row.digest.clone(),
                seed: row.seed,
                grid_gap: row.grid_gap.unwrap_or(0.0),
                flagged: Vec::new(),
                all_flagged: row.all_flagged.unwrap_or(false),
            });
        }
        Ok(out)
    }
}
