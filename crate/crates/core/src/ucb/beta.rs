use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetaKind {
    /// `c0^2 ln(1 + rho t) ln(e + 6 pi^-2 c_subg t^2 / delta)`.
    Theorem2,
    /// `2 ln(t^2 2 pi^2 / (3 delta)) + offset`, a comparison baseline.
    SrinivasStyle,
    Constant,
}

impl BetaKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BetaKind::Theorem2 => "theorem2",
            BetaKind::SrinivasStyle => "srinivas",
            BetaKind::Constant => "constant",
        }
    }
}

impl fmt::Display for BetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theorem2" => Ok(BetaKind::Theorem2),
            "srinivas" | "srinivas_style" => Ok(BetaKind::SrinivasStyle),
            "constant" => Ok(BetaKind::Constant),
            other => Err(Error::invalid(format!("unknown beta kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BetaSchedule {
    pub kind: BetaKind,
    pub delta: f64,
    pub c0: f64,
    pub c_subg: f64,
    pub constant_value: f64,
    pub offset: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule {
            kind: BetaKind::Theorem2,
            delta: 0.1,
            c0: 1.0,
            c_subg: 1.0,
            constant_value: 1.0,
            offset: 0.0,
        }
    }
}

impl BetaSchedule {
    pub fn theorem2(delta: f64, c0: f64, c_subg: f64) -> Result<Self> {
        let s = BetaSchedule {
            delta,
            c0,
            c_subg,
            ..Default::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64) -> Result<Self> {
        let s = BetaSchedule {
            kind: BetaKind::Constant,
            constant_value: value,
            ..Default::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        for (name, v) in [("c0", self.c0), ("c_subg", self.c_subg)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.kind == BetaKind::Constant && !(self.constant_value > 0.0 && self.constant_value.is_finite()) {
            return Err(Error::invalid(format!(
                "constant_value must be > 0, got {}",
                self.constant_value
            )));
        }
        if !self.offset.is_finite() {
            return Err(Error::invalid("offset must be finite"));
        }
        Ok(())
    }

    /// The part of the default schedule that grows with `t`, so that
    /// `beta_t = c0^2 * growth(t)`. `t = 0` is mapped to `t = 1`.
    pub fn growth(&self, t: usize, rho: f64) -> f64 {
        let t = t.max(1) as f64;
        (1.0 + rho * t).ln() * (E + 6.0 / (PI * PI) * self.c_subg * t * t / self.delta).ln()
    }

    /// `beta_t`; `t = 0` uses the `t = 1` value.
    pub fn value(&self, t: usize, rho: f64) -> f64 {
        match self.kind {
            BetaKind::Theorem2 => self.c0 * self.c0 * self.growth(t, rho),
            BetaKind::SrinivasStyle => {
                let t = t.max(1) as f64;
                2.0 * (t * t * 2.0 * PI * PI / (3.0 * self.delta)).ln() + self.offset
            }
            BetaKind::Constant => self.constant_value,
        }
    }
}
