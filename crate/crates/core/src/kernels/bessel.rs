//! Modified Bessel function of the second kind, `K_nu(z)`, for real order `nu > 0`.
//!
//! Half-integer orders use the finite exponential sum. Other orders reduce to
//! `mu = nu - round(nu)` in `[-1/2, 1/2)`, evaluate `K_mu` and `K_{mu+1}` with
//! Temme's series (`z < 2`) or Steed's continued fraction (`z >= 2`), then
//! recur upward in the order. Values are carried as `mantissa * exp(log_scale)`
//! so that large orders at small arguments do not overflow.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;
const SERIES_CROSSOVER: f64 = 2.0;
const MAX_CLOSED_FORM_ORDER: u32 = 30;
const RESCALE_AT: f64 = 1e250;

/// Taylor coefficients of `1/Gamma(x)` about zero; entry `k` multiplies `x^(k+1)`.
const RGAMMA_TAYLOR: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_860_606_512_1,
    -0.655_878_071_520_253_881_077_019_5,
    -0.042_002_635_034_095_235_529_003_93,
    0.166_538_611_382_291_489_501_700_8,
    -0.042_197_734_555_544_336_748_208_3,
    -0.009_621_971_527_876_973_562_114_922,
    0.007_218_943_246_663_099_542_395_01,
    -0.001_165_167_591_859_065_112_113_971,
    -0.000_215_241_674_114_950_972_815_73,
    0.000_128_050_282_388_116_186_153_198_6,
    -0.000_020_134_854_780_788_238_655_689_39,
    -0.000_001_250_493_482_142_670_657_345_359,
    0.000_001_133_027_231_981_695_882_374_13,
    -0.000_000_205_633_841_697_760_710_345_015_4,
    6.116_095_104_481_415_817_862_499e-9,
    5.002_007_644_469_222_930_055_665e-9,
    -1.181_274_570_487_020_144_588_127e-9,
    1.043_426_711_691_100_510_491_54e-10,
    7.782_263_439_905_071_254_049_937e-12,
    -3.696_805_618_642_205_708_187_816e-12,
    5.100_370_287_454_475_979_015_481e-13,
    -2.058_326_053_566_506_783_222_43e-14,
    -5.348_122_539_423_017_982_370_017e-15,
    1.226_778_628_238_260_790_158_894e-15,
    -1.181_259_301_697_458_769_513_765e-16,
];

/// `K_nu(z) = mantissa * exp(log_scale)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledBesselK {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl ScaledBesselK {
    pub fn ln(self) -> f64 {
        self.mantissa.ln() + self.log_scale
    }

    pub fn value(self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }
}

/// `K_nu(z)` for `nu > 0`, `z > 0`.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    let k = bessel_k_scaled(nu, z)?;
    let v = k.value();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow { nu, z })
    }
}

/// `ln K_nu(z)`; finite wherever the mantissa/scale pair is, which covers orders
/// and arguments whose value would over- or underflow.
pub fn ln_bessel_k(nu: f64, z: f64) -> Result<f64> {
    bessel_k_scaled(nu, z).map(ScaledBesselK::ln)
}

pub fn bessel_k_scaled(nu: f64, z: f64) -> Result<ScaledBesselK> {
    if !(nu > 0.0 && nu.is_finite() && z > 0.0 && z.is_finite()) {
        return Err(Error::Domain { nu, z });
    }
    if let Some(n) = half_integer_index(nu) {
        if let Some(k) = half_integer_closed_form(n, z) {
            return Ok(k);
        }
    }
    Ok(temme_recurrence(nu, z))
}

/// `n` when `nu = n + 1/2` exactly and `n` is small enough for the closed form.
pub(crate) fn half_integer_index(nu: f64) -> Option<u32> {
    let n = nu - 0.5;
    (n >= 0.0 && n.fract() == 0.0 && n <= MAX_CLOSED_FORM_ORDER as f64).then_some(n as u32)
}

/// `K_{n+1/2}(z) = sqrt(pi/(2z)) e^{-z} sum_{k=0}^{n} (n+k)! / (k! (n-k)!) (2z)^{-k}`.
fn half_integer_closed_form(n: u32, z: f64) -> Option<ScaledBesselK> {
    let inv_2z = 0.5 / z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        let nf = n as f64;
        term *= (nf + kf) * (nf - kf + 1.0) / kf * inv_2z;
        sum += term;
    }
    let mantissa = (PI / (2.0 * z)).sqrt() * sum;
    mantissa.is_finite().then_some(ScaledBesselK {
        mantissa,
        log_scale: -z,
    })
}

struct TemmeGammas {
    /// `(1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)`
    gam1: f64,
    /// `(1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`
    gam2: f64,
    /// `1/Gamma(1+mu)`
    gampl: f64,
    /// `1/Gamma(1-mu)`
    gammi: f64,
}

fn temme_gammas(mu: f64) -> TemmeGammas {
    // 1/Gamma(1+x) = sum_k c_k x^(k-1); split into even/odd powers of mu.
    let mu2 = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    for pair in RGAMMA_TAYLOR.chunks(2).rev() {
        gam2 = gam2 * mu2 + pair[0];
        if let Some(&c) = pair.get(1) {
            gam1 = gam1 * mu2 - c;
        }
    }
    TemmeGammas {
        gam1,
        gam2,
        gampl: gam2 - mu * gam1,
        gammi: gam2 + mu * gam1,
    }
}

/// `(K_mu(z), K_{mu+1}(z))` for `|mu| <= 1/2` and `z < 2`.
fn temme_series(mu: f64, z: f64) -> (f64, f64) {
    let x2 = 0.5 * z;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let g = temme_gammas(mu);
    let mut ff = fact * (g.gam1 * e.cosh() + g.gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / g.gampl;
    let mut q = 0.5 / (ee * g.gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        sum1 += c * (p - fi * ff);
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 / x2)
}

/// `(e^z K_mu(z), e^z K_{mu+1}(z))` for `|mu| <= 1/2` and `z >= 2` (Steed's CF2).
fn steed_cf2_scaled(mu: f64, z: f64) -> (f64, f64) {
    let mu2 = mu * mu;
    let mut b = 2.0 * (1.0 + z);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu2;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            break;
        }
    }
    h *= a1;
    let kmu = (PI / (2.0 * z)).sqrt() / s;
    let k1 = kmu * (mu + z + 0.5 - h) / z;
    (kmu, k1)
}

fn temme_recurrence(nu: f64, z: f64) -> ScaledBesselK {
    let steps = (nu + 0.5).floor();
    let mu = nu - steps;
    let (mut k_prev, mut k_cur, mut log_scale) = if z < SERIES_CROSSOVER {
        let (a, b) = temme_series(mu, z);
        (a, b, 0.0)
    } else {
        let (a, b) = steed_cf2_scaled(mu, z);
        (a, b, -z)
    };
    let two_over_z = 2.0 / z;
    for i in 1..=steps as usize {
        let next = k_prev + (mu + i as f64) * two_over_z * k_cur;
        k_prev = k_cur;
        k_cur = next;
        if k_cur.abs() > RESCALE_AT {
            k_prev /= RESCALE_AT;
            k_cur /= RESCALE_AT;
            log_scale += RESCALE_AT.ln();
        }
    }
    ScaledBesselK {
        mantissa: k_prev,
        log_scale,
    }
}
