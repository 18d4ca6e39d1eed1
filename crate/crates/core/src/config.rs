//! Experiment configuration: a flat `key = value` file with dotted key paths.
//!
//! ```text
//! kernel.family = matern
//! kernel.nu = 1.5
//! domain.dim = 1
//! domain.lower = 0
//! domain.upper = 1
//! rho = 1
//! noise.sigma = 0.1
//! horizon = 256
//! candidates.count = 256
//! objective.kind = random
//! objective.m = 20
//! objective.B = 1
//! seeds = 1, 2, 3
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::points::{BoxDomain, PointSet};
use crate::rkhs::RkhsFunction;
use crate::textfmt::{fmt_f64, fmt_list, KeyValues};
use crate::ucb::{BetaSchedule, NoiseKind, NoiseModel};

/// Keys that accept a single value and may be used as a sweep axis.
pub const SCALAR_KEYS: &[&str] = &[
    "kernel.family",
    "kernel.nu",
    "kernel.lengthscale",
    "rho",
    "noise.kind",
    "noise.sigma",
    "horizon",
    "beta.kind",
    "beta.delta",
    "beta.c0",
    "beta.c_subg",
    "beta.constant_value",
    "beta.offset",
    "candidates.count",
    "candidates.method",
    "eval_grid.count",
    "objective.kind",
    "objective.m",
    "objective.B",
    "objective.seed",
];

const LIST_KEYS: &[&str] = &[
    "domain.dim",
    "domain.lower",
    "domain.upper",
    "objective.centers",
    "objective.coeffs",
    "seeds",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridMethod {
    Lattice,
    LowDiscrepancy,
}

impl FromStr for GridMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lattice" => Ok(GridMethod::Lattice),
            "low_discrepancy" | "halton" => Ok(GridMethod::LowDiscrepancy),
            other => Err(Error::invalid(format!("unknown grid method `{other}`"))),
        }
    }
}

impl GridMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GridMethod::Lattice => "lattice",
            GridMethod::LowDiscrepancy => "low_discrepancy",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveConfig {
    /// Random expansion with `m` centers rescaled to norm `b`. Without `seed`
    /// every run seed draws its own objective.
    Random { m: usize, b: f64, seed: Option<u64> },
    /// Fixed expansion, optionally rescaled to norm `b`.
    Explicit {
        centers: PointSet,
        coeffs: Vec<f64>,
        b: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub domain: BoxDomain,
    pub rho: f64,
    pub noise: NoiseModel,
    pub horizon: usize,
    pub beta: BetaSchedule,
    pub candidates_count: usize,
    pub candidates_method: GridMethod,
    pub eval_grid_count: usize,
    pub objective: ObjectiveConfig,
    pub seeds: Vec<u64>,
}

fn known_key(key: &str) -> bool {
    SCALAR_KEYS.contains(&key) || LIST_KEYS.contains(&key)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text, path)?)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(k) = kv.keys().find(|k| !known_key(k)) {
            return Err(kv.error(k, "unknown key"));
        }
        let wrap = |key: &'static str| move |e: Error| kv.error(key, e.to_string());

        let family: KernelFamily = kv.get("kernel.family")?;
        let lengthscale = kv.get_or("kernel.lengthscale", 1.0)?;
        let kernel = match family {
            KernelFamily::Matern => {
                let nu: f64 = kv.get("kernel.nu")?;
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(kv.error("kernel.nu", format!("must be > 0, got {nu}")));
                }
                KernelSpec::matern(nu, lengthscale)
            }
            KernelFamily::SquaredExponential => KernelSpec::squared_exponential(lengthscale),
        }
        .map_err(wrap("kernel.lengthscale"))?;

        let dim: usize = kv.get("domain.dim")?;
        let lower: Vec<f64> = kv.get_list("domain.lower")?;
        let upper: Vec<f64> = kv.get_list("domain.upper")?;
        if dim == 0 {
            return Err(kv.error("domain.dim", "must be >= 1"));
        }
        for (key, v) in [("domain.lower", &lower), ("domain.upper", &upper)] {
            if v.len() != dim {
                return Err(kv.error(key, format!("expected {dim} values, got {}", v.len())));
            }
        }
        let domain = BoxDomain::new(lower, upper).map_err(wrap("domain.upper"))?;

        let rho: f64 = kv.get("rho")?;
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(kv.error("rho", format!("must be > 0, got {rho}")));
        }
        let noise = NoiseModel::new(kv.get_or("noise.kind", NoiseKind::Normal)?, kv.get("noise.sigma")?)
            .map_err(wrap("noise.sigma"))?;

        let horizon: usize = kv.get("horizon")?;
        if horizon == 0 {
            return Err(kv.error("horizon", "must be >= 1"));
        }

        let defaults = BetaSchedule::default();
        let beta = BetaSchedule {
            kind: kv.get_or("beta.kind", defaults.kind)?,
            delta: kv.get_or("beta.delta", defaults.delta)?,
            c0: kv.get_or("beta.c0", defaults.c0)?,
            c_subg: kv.get_or("beta.c_subg", defaults.c_subg)?,
            constant_value: kv.get_or("beta.constant_value", defaults.constant_value)?,
            offset: kv.get_or("beta.offset", defaults.offset)?,
        };
        if let Err(e) = beta.validate() {
            let key = match e.to_string() {
                m if m.contains("delta") => "beta.delta",
                m if m.contains("c_subg") => "beta.c_subg",
                m if m.contains("c0") => "beta.c0",
                m if m.contains("offset") => "beta.offset",
                _ => "beta.constant_value",
            };
            return Err(kv.error(key, e.to_string()));
        }

        let candidates_count: usize = kv.get("candidates.count")?;
        if candidates_count == 0 {
            return Err(kv.error("candidates.count", "must be >= 1"));
        }
        let candidates_method = kv.get_or("candidates.method", GridMethod::Lattice)?;
        let eval_grid_count = kv.get_or("eval_grid.count", candidates_count)?;
        if eval_grid_count < candidates_count {
            return Err(kv.error("eval_grid.count", "must be >= candidates.count"));
        }

        let objective = match kv.required("objective.kind")? {
            "random" => {
                let m: usize = kv.get("objective.m")?;
                if m == 0 {
                    return Err(kv.error("objective.m", "must be >= 1"));
                }
                let b: f64 = kv.get("objective.B")?;
                if !(b > 0.0 && b.is_finite()) {
                    return Err(kv.error("objective.B", format!("must be > 0, got {b}")));
                }
                let seed = match kv.raw("objective.seed") {
                    None | Some("none") => None,
                    Some(v) => Some(kv.parse_value("objective.seed", v)?),
                };
                ObjectiveConfig::Random { m, b, seed }
            }
            "explicit" => {
                let coords: Vec<f64> = kv.get_list("objective.centers")?;
                let centers = PointSet::new(dim, coords).map_err(wrap("objective.centers"))?;
                if !centers.iter().all(|c| domain.contains(c)) {
                    return Err(kv.error("objective.centers", "centers must lie inside the domain"));
                }
                let coeffs: Vec<f64> = kv.get_list("objective.coeffs")?;
                if coeffs.len() != centers.len() || coeffs.is_empty() {
                    return Err(kv.error("objective.coeffs", "need one coefficient per center"));
                }
                let b: Option<f64> = kv.get_opt("objective.B")?;
                if let Some(b) = b {
                    if !(b > 0.0 && b.is_finite()) {
                        return Err(kv.error("objective.B", format!("must be > 0, got {b}")));
                    }
                }
                ObjectiveConfig::Explicit { centers, coeffs, b }
            }
            other => return Err(kv.error("objective.kind", format!("expected random or explicit, got `{other}`"))),
        };

        let seeds: Vec<u64> = kv.get_list("seeds")?;
        if seeds.is_empty() {
            return Err(kv.error("seeds", "at least one seed is required"));
        }

        Ok(ExperimentConfig {
            kernel,
            domain,
            rho,
            noise,
            horizon,
            beta,
            candidates_count,
            candidates_method,
            eval_grid_count,
            objective,
            seeds,
        })
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("kernel.family", self.kernel.family().to_string());
        if self.kernel.family() == KernelFamily::Matern {
            put("kernel.nu", fmt_f64(self.kernel.nu()));
        }
        put("kernel.lengthscale", fmt_f64(self.kernel.lengthscale()));
        put("domain.dim", self.domain.dim().to_string());
        put("domain.lower", fmt_list(self.domain.lower()));
        put("domain.upper", fmt_list(self.domain.upper()));
        put("rho", fmt_f64(self.rho));
        put("noise.kind", self.noise.kind.to_string());
        put("noise.sigma", fmt_f64(self.noise.sigma));
        put("horizon", self.horizon.to_string());
        put("beta.kind", self.beta.kind.to_string());
        put("beta.delta", fmt_f64(self.beta.delta));
        put("beta.c0", fmt_f64(self.beta.c0));
        put("beta.c_subg", fmt_f64(self.beta.c_subg));
        put("beta.constant_value", fmt_f64(self.beta.constant_value));
        put("beta.offset", fmt_f64(self.beta.offset));
        put("candidates.count", self.candidates_count.to_string());
        put("candidates.method", self.candidates_method.as_str().to_string());
        put("eval_grid.count", self.eval_grid_count.to_string());
        match &self.objective {
            ObjectiveConfig::Random { m, b, seed } => {
                put("objective.kind", "random".into());
                put("objective.m", m.to_string());
                put("objective.B", fmt_f64(*b));
                put("objective.seed", seed.map_or("none".into(), |s| s.to_string()));
            }
            ObjectiveConfig::Explicit { centers, coeffs, b } => {
                put("objective.kind", "explicit".into());
                put("objective.centers", fmt_list(centers.coords()));
                put("objective.coeffs", fmt_list(coeffs));
                if let Some(b) = b {
                    put("objective.B", fmt_f64(*b));
                }
            }
        }
        put(
            "seeds",
            self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", "),
        );
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&hash[..8])
    }

    /// A copy with one scalar key replaced, re-validated.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(&self.to_text(), "override")?;
        if !SCALAR_KEYS.contains(&key) {
            return Err(kv.error(key, "not a scalar configuration key"));
        }
        kv.set(key, value);
        Self::from_key_values(&kv)
    }

    pub fn candidate_points(&self) -> PointSet {
        match self.candidates_method {
            GridMethod::Lattice => self.domain.lattice(self.candidates_count),
            GridMethod::LowDiscrepancy => self.domain.halton(self.candidates_count),
        }
    }

    /// The candidates followed by the points of an `eval_grid.count` lattice not
    /// already among them.
    pub fn eval_points(&self) -> PointSet {
        let mut pts = self.candidate_points();
        let key = |x: &[f64]| x.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        let mut seen: HashSet<Vec<u64>> = pts.iter().map(key).collect();
        for x in self.domain.lattice(self.eval_grid_count).iter() {
            if seen.insert(key(x)) {
                pts.push(x).expect("lattice matches domain dimension");
            }
        }
        pts
    }

    /// The objective used for runs with master seed `seed`.
    pub fn objective_for_seed(&self, seed: u64) -> Result<RkhsFunction> {
        match &self.objective {
            ObjectiveConfig::Random { m, b, seed: fixed } => {
                RkhsFunction::sample(self.kernel.clone(), *m, *b, &self.domain, fixed.unwrap_or(seed))
            }
            ObjectiveConfig::Explicit { centers, coeffs, b } => {
                let f = RkhsFunction::new(self.kernel.clone(), centers.clone(), coeffs.clone())?;
                match b {
                    Some(b) => f.scale_to_norm(*b),
                    None => Ok(f),
                }
            }
        }
    }

    /// Whether every seed shares one objective.
    pub fn shared_objective(&self) -> bool {
        !matches!(self.objective, ObjectiveConfig::Random { seed: None, .. })
    }
}
