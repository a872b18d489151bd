//! Bath noise spectra as rate functions of signed angular frequency.
//!
//! A spectrum is a nonnegative base profile `S(|ω|)` plus a closure that fixes
//! the negative-frequency side:
//!
//! * quantum at temperature `k_BT`: `S(ω)(1 + n̄(ω))` for `ω > 0` and
//!   `S(|ω|) n̄(|ω|)` for `ω < 0`, so `eval(−ω) = e^{−ω/k_BT} eval(ω)`; at
//!   `k_BT = 0` the negative side vanishes;
//! * classical: symmetric, `eval(−ω) = eval(ω)`.
//!
//! Positive frequency means energy emitted into the bath.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::units::{ghz, mhz};

/// Bose-Einstein occupation `1/(e^{ω/k_BT} − 1)`, zero at `k_BT = 0`.
pub fn nbar(omega: f64, kbt: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("nbar needs omega > 0, got {omega}")));
    }
    if kbt < 0.0 || kbt.is_nan() {
        return Err(Error::InvalidParameter(format!("k_BT must be >= 0, got {kbt}")));
    }
    if kbt == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / kbt).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutOfRange {
    Error,
    Clamp,
}

/// Rates sampled at positive frequencies, interpolated linearly in `ln ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    omega: Vec<f64>,
    rate: Vec<f64>,
    policy: OutOfRange,
}

impl Table {
    pub fn new(omega: Vec<f64>, rate: Vec<f64>, policy: OutOfRange) -> Result<Self> {
        if omega.len() != rate.len() || omega.len() < 2 {
            return Err(Error::InvalidParameter(
                "a table needs at least two (frequency, rate) rows".into(),
            ));
        }
        if omega[0] <= 0.0 || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "table frequencies must be positive and strictly increasing".into(),
            ));
        }
        if rate.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter("table rates must be finite and >= 0".into()));
        }
        Ok(Self { omega, rate, policy })
    }

    /// Two columns `frequency [GHz], rate [MHz]`; `#` starts a comment line.
    pub fn from_csv_str(text: &str, policy: OutOfRange) -> Result<Self> {
        let mut omega = Vec::new();
        let mut rate = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(Error::Table {
                    line: i + 1,
                    msg: format!("expected 2 columns, found {}", fields.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Table { line: i + 1, msg: format!("`{s}`: {e}") })
            };
            omega.push(ghz(parse(fields[0])?));
            rate.push(mhz(parse(fields[1])?));
        }
        Self::new(omega, rate, policy)
    }

    pub fn load(path: impl AsRef<Path>, policy: OutOfRange) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?, policy)
    }

    fn eval(&self, w: f64) -> Result<f64> {
        let (lo, hi) = (self.omega[0], *self.omega.last().unwrap());
        if w < lo || w > hi {
            return match self.policy {
                OutOfRange::Error => Err(Error::OutOfTable { omega: w, lo, hi }),
                OutOfRange::Clamp => Ok(if w < lo { self.rate[0] } else { *self.rate.last().unwrap() }),
            };
        }
        let k = self.omega.partition_point(|&x| x <= w).clamp(1, self.omega.len() - 1);
        let (x0, x1) = (self.omega[k - 1].ln(), self.omega[k].ln());
        let t = (w.ln() - x0) / (x1 - x0);
        Ok(self.rate[k - 1] + t * (self.rate[k] - self.rate[k - 1]))
    }
}

/// Profile `S(|ω|)` before closure.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSpectrum {
    White { rate: f64 },
    /// `rate · (|ω|/omega_ref)^exponent`
    Ohmic { rate: f64, omega_ref: f64, exponent: f64 },
    /// `amplitude / max(|ω|, omega_min)`
    OneOverF { amplitude: f64, omega_min: f64 },
    /// `rate` for `|ω| ≤ cutoff`, zero beyond.
    BandLimitedWhite { rate: f64, cutoff: f64 },
    Tabulated(Table),
}

impl BaseSpectrum {
    fn eval(&self, w: f64) -> Result<f64> {
        let w = w.abs();
        Ok(match self {
            BaseSpectrum::White { rate } => *rate,
            BaseSpectrum::Ohmic { rate, omega_ref, exponent } => {
                if *exponent == 0.0 {
                    *rate
                } else {
                    rate * (w / omega_ref).powf(*exponent)
                }
            }
            BaseSpectrum::OneOverF { amplitude, omega_min } => amplitude / w.max(*omega_min),
            BaseSpectrum::BandLimitedWhite { rate, cutoff } => {
                if w <= *cutoff {
                    *rate
                } else {
                    0.0
                }
            }
            BaseSpectrum::Tabulated(t) => t.eval(w)?,
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BaseSpectrum::White { .. } => "white",
            BaseSpectrum::Ohmic { .. } => "ohmic",
            BaseSpectrum::OneOverF { .. } => "one_over_f",
            BaseSpectrum::BandLimitedWhite { .. } => "band_limited_white",
            BaseSpectrum::Tabulated(_) => "tabulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure {
    Quantum { kbt: f64 },
    Classical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    base: BaseSpectrum,
    closure: Closure,
    zero_frequency: Option<f64>,
}

fn nonneg(name: &str, x: f64) -> Result<f64> {
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {x}")))
    }
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl NoiseSpectrum {
    /// Wraps a base profile in a zero-temperature quantum closure.
    pub fn from_base(base: BaseSpectrum) -> Self {
        Self { base, closure: Closure::Quantum { kbt: 0.0 }, zero_frequency: None }
    }

    pub fn zero() -> Self {
        Self::from_base(BaseSpectrum::White { rate: 0.0 })
    }

    pub fn white(rate: f64) -> Result<Self> {
        Ok(Self::from_base(BaseSpectrum::White { rate: nonneg("rate", rate)? }))
    }

    /// Linear in `|ω|`, equal to `rate` at `omega_ref`.
    pub fn ohmic(rate: f64, omega_ref: f64) -> Result<Self> {
        Self::ohmic_with_exponent(rate, omega_ref, 1.0)
    }

    pub fn ohmic_with_exponent(rate: f64, omega_ref: f64, exponent: f64) -> Result<Self> {
        if !exponent.is_finite() {
            return Err(Error::InvalidParameter("ohmic exponent must be finite".into()));
        }
        Ok(Self::from_base(BaseSpectrum::Ohmic {
            rate: nonneg("rate", rate)?,
            omega_ref: positive("omega_ref", omega_ref)?,
            exponent,
        }))
    }

    pub fn one_over_f(amplitude: f64, omega_min: f64) -> Result<Self> {
        Ok(Self::from_base(BaseSpectrum::OneOverF {
            amplitude: nonneg("amplitude", amplitude)?,
            omega_min: positive("omega_min", omega_min)?,
        }))
    }

    pub fn band_limited_white(rate: f64, cutoff: f64) -> Result<Self> {
        Ok(Self::from_base(BaseSpectrum::BandLimitedWhite {
            rate: nonneg("rate", rate)?,
            cutoff: positive("cutoff", cutoff)?,
        }))
    }

    pub fn tabulated(table: Table) -> Self {
        Self::from_base(BaseSpectrum::Tabulated(table))
    }

    /// Quantum closure at `k_BT` (angular frequency); zero is allowed.
    pub fn thermal(mut self, kbt: f64) -> Result<Self> {
        self.closure = Closure::Quantum { kbt: nonneg("k_BT", kbt)? };
        Ok(self)
    }

    /// Symmetric extension to negative frequencies.
    pub fn classical(mut self) -> Self {
        self.closure = Closure::Classical;
        self
    }

    /// Independent zero-frequency rate, e.g. `γ_φ(0)` next to a 1/f profile.
    pub fn with_zero_frequency(mut self, rate: f64) -> Result<Self> {
        self.zero_frequency = Some(nonneg("zero-frequency rate", rate)?);
        Ok(self)
    }

    pub fn base(&self) -> &BaseSpectrum {
        &self.base
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn kbt(&self) -> Option<f64> {
        match self.closure {
            Closure::Quantum { kbt } => Some(kbt),
            Closure::Classical => None,
        }
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.closure, Closure::Classical)
    }

    /// Rate at signed angular frequency `omega`.
    pub fn eval(&self, omega: f64) -> Result<f64> {
        if omega == 0.0 {
            return match self.zero_frequency {
                Some(r) => Ok(r),
                None => self.base.eval(0.0),
            };
        }
        let s = self.base.eval(omega)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        match self.closure {
            Closure::Classical => Ok(s),
            Closure::Quantum { kbt } => {
                let n = nbar(omega.abs(), kbt)?;
                Ok(if omega > 0.0 { s * (1.0 + n) } else { s * n })
            }
        }
    }

    /// Whether the closure can put weight at negative frequencies.
    pub fn has_negative_weight(&self) -> bool {
        match self.closure {
            Closure::Classical => true,
            Closure::Quantum { kbt } => kbt > 0.0,
        }
    }
}

impl fmt::Display for NoiseSpectrum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base.kind_name())?;
        match self.closure {
            Closure::Classical => write!(f, " (classical)"),
            Closure::Quantum { kbt } => write!(f, " (kBT = {kbt:.4e} rad/ns)"),
        }
    }
}

/// The three independent baths: resonator field `X`, qubit `σ_x`, qubit `σ_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Baths {
    pub kappa: NoiseSpectrum,
    pub gamma: NoiseSpectrum,
    pub gamma_phi: NoiseSpectrum,
}

impl Baths {
    pub fn white(kappa: f64, gamma: f64, gamma_phi: f64) -> Result<Self> {
        Ok(Self {
            kappa: NoiseSpectrum::white(kappa)?,
            gamma: NoiseSpectrum::white(gamma)?,
            gamma_phi: NoiseSpectrum::white(gamma_phi)?,
        })
    }
}
