use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::textfmt::fmt_f64;

/// One GP-UCB step: `beta`, `sigma` and `mu` are the values used to select `x`
/// (posterior after `t - 1` observations).
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub t: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub beta: f64,
    pub sigma: f64,
    pub mu: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretTrace {
    pub steps: Vec<TraceStep>,
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub digest: String,
    pub seed: u64,
    /// `f_star` minus the best value on the candidate grid.
    pub grid_gap: f64,
    /// Per step: the uniform bound held at the best candidate and at `x_t`.
    /// Empty for traces read back from CSV.
    pub flagged: Vec<bool>,
    /// Whether every step was flagged.
    pub all_flagged: bool,
}

impl RegretTrace {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    pub fn dim(&self) -> usize {
        self.steps.first().map_or(self.x_star.len(), |s| s.x.len())
    }

    pub fn cum_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }

    /// The first `t` steps, as if the run had stopped there.
    pub fn truncated(&self, t: usize) -> RegretTrace {
        let t = t.min(self.steps.len());
        let flagged: Vec<bool> = self.flagged.iter().copied().take(t).collect();
        let all_flagged = if self.flagged.is_empty() {
            self.all_flagged
        } else {
            flagged.iter().all(|&f| f)
        };
        RegretTrace {
            steps: self.steps[..t].to_vec(),
            flagged,
            all_flagged,
            ..self.clone()
        }
    }

    /// Steps (1-based) that are flagged yet violate
    /// `inst_regret <= 2 sqrt(beta) sigma + grid_gap`.
    pub fn flagged_violations(&self) -> Vec<usize> {
        self.steps
            .iter()
            .zip(&self.flagged)
            .filter(|(s, &f)| f && s.inst_regret > 2.0 * s.beta.sqrt() * s.sigma + self.grid_gap + 1e-12)
            .map(|(s, _)| s.t)
            .collect()
    }

    /// `(sum sqrt(beta) sigma, sqrt(T beta_{T-1} sum sigma^2))`; the first never exceeds the second.
    pub fn cauchy_schwarz(&self) -> (f64, f64) {
        let lhs: f64 = self.steps.iter().map(|s| s.beta.sqrt() * s.sigma).sum();
        let sum_sq: f64 = self.steps.iter().map(|s| s.sigma * s.sigma).sum();
        let beta_last = self.steps.last().map_or(0.0, |s| s.beta);
        (lhs, (self.steps.len() as f64 * beta_last * sum_sq).sqrt())
    }

    pub fn csv_header(dim: usize) -> String {
        let mut h = String::from("t");
        for k in 1..=dim {
            write!(h, ",x_{k}").unwrap();
        }
        h.push_str(",y,beta,sigma,mu,inst_regret,cum_regret");
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = Self::csv_header(self.dim());
        out.push('\n');
        for s in &self.steps {
            write!(out, "{}", s.t).unwrap();
            for v in s.x.iter().chain([&s.y, &s.beta, &s.sigma, &s.mu, &s.inst_regret, &s.cum_regret]) {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the step rows written by [`RegretTrace::to_csv`].
    pub fn parse_csv(text: &str) -> Result<Vec<TraceStep>> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("empty trace CSV"))?;
        let cols = header.split(',').count();
        if cols < 8 {
            return Err(Error::invalid("trace CSV header has too few columns"));
        }
        let dim = cols - 7;
        if header != Self::csv_header(dim) {
            return Err(Error::invalid(format!("unexpected trace CSV header `{header}`")));
        }
        let mut steps = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = || Error::invalid(format!("trace CSV row {}: `{line}`", i + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Err(bad());
            }
            let t: usize = fields[0].parse().map_err(|_| bad())?;
            let vals = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?;
            let r = &vals[dim..];
            steps.push(TraceStep {
                t,
                x: vals[..dim].to_vec(),
                y: r[0],
                beta: r[1],
                sigma: r[2],
                mu: r[3],
                inst_regret: r[4],
                cum_regret: r[5],
            });
        }
        Ok(steps)
    }
}
