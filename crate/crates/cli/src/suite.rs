//! Seeded suites: one GP-UCB run per seed, written to a run directory.

use std::fs;
use std::path::{Path, PathBuf};

use gpucb::config::SCALAR_KEYS;
use gpucb::ucb::{run_gp_ucb_with, RegretTrace};
use gpucb::{Error, Exec, ExperimentConfig, RkhsFunction};

use crate::layout::{self, SummaryRow};
use crate::{exit, CliError};

pub struct SeedRun {
    pub objective: RkhsFunction,
    pub trace: RegretTrace,
}

/// Runs every configured seed; seeds run concurrently, each run is sequential.
pub fn run_seeds(config: &ExperimentConfig) -> Vec<Result<SeedRun, Error>> {
    let (outer, inner) = if config.seeds.len() > 1 {
        (Exec::default(), Exec::Sequential)
    } else {
        (Exec::Sequential, Exec::default())
    };
    outer.map(&config.seeds, |&seed| {
        let objective = config.objective_for_seed(seed)?;
        let trace = run_gp_ucb_with(config, &objective, seed, inner)?;
        Ok(SeedRun { objective, trace })
    })
}

fn write_all(out: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| {
        fs::create_dir_all(out)?;
        for (name, body) in files {
            let path = out.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok::<_, std::io::Error>(())
    })();
    if let Err(e) = result {
        for p in written {
            let _ = fs::remove_file(p);
        }
        return Err(e.into());
    }
    Ok(())
}

/// Runs all seeds and writes the run directory. Nothing is left behind on error.
pub fn run_to_dir(config: &ExperimentConfig, out: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let mut runs = Vec::new();
    for (seed, r) in config.seeds.iter().zip(run_seeds(config)) {
        match r {
            Ok(run) => runs.push(run),
            Err(e) if e.is_numeric() => return Err(CliError::Numeric(format!("seed {seed}: {e}"))),
            Err(e) => return Err(CliError::from(e)),
        }
    }
    let mut files = vec![(layout::CONFIG_FILE.to_string(), config.to_text())];
    let objectives: Vec<(u64, RkhsFunction)> = runs.iter().map(|r| (r.trace.seed, r.objective.clone())).collect();
    files.push((
        layout::OBJECTIVE_FILE.to_string(),
        layout::objectives_text(&objectives, config.shared_objective()),
    ));
    let mut rows = Vec::new();
    for run in &runs {
        files.push((layout::trace_file(run.trace.seed), run.trace.to_csv()));
        rows.push(SummaryRow::from_trace(&run.trace));
    }
    files.push((layout::SUMMARY_FILE.to_string(), layout::summary_csv(&rows)));
    write_all(out, &files)?;
    Ok(rows)
}

/// Directory name for one sweep cell.
pub fn cell_dir_name(axis: &str, value: &str) -> String {
    let clean: String = value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || ".-_".contains(c) { c } else { '_' })
        .collect();
    format!("{axis}_{clean}")
}

/// One run directory per value plus a merged `summary.csv`. A failing cell is
/// recorded and the remaining cells still run; the exit code reflects the worst cell.
pub fn sweep_to_dir(config: &ExperimentConfig, axis: &str, values: &[String], out: &Path) -> Result<i32, CliError> {
    if !SCALAR_KEYS.contains(&axis) {
        return Err(CliError::Config(format!(
            "sweep axis `{axis}` is not a scalar configuration key (one of: {})",
            SCALAR_KEYS.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(CliError::Config("--values needs at least one value".into()));
    }
    let mut merged = Vec::new();
    let mut code = exit::OK;
    for value in values {
        let value = value.trim();
        let cell = (axis.to_string(), value.to_string());
        let result = config
            .with_override(axis, value)
            .map_err(|e| CliError::Config(e.to_string()))
            .and_then(|c| run_to_dir(&c, &out.join(cell_dir_name(axis, value))));
        match result {
            Ok(rows) => merged.extend(rows.into_iter().map(|r| SummaryRow {
                cell: Some(cell.clone()),
                ..r
            })),
            Err(e) => {
                eprintln!("{axis} = {value}: {e}");
                code = code.max(e.exit_code());
                let digest = config.with_override(axis, value).map(|c| c.digest()).unwrap_or_default();
                merged.extend(config.seeds.iter().map(|&seed| SummaryRow {
                    cell: Some(cell.clone()),
                    ..SummaryRow::failed(&digest, seed, &e.to_string())
                }));
            }
        }
    }
    write_all(out, &[(layout::SUMMARY_FILE.to_string(), layout::summary_csv(&merged))])?;
    Ok(code)
}
