//! Noise correlator models.
//!
//! All correlators are normalized so that the spectrum at zero frequency is 1
//! (when the spectrum is defined there) and are symmetric in time lag.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Read;
use std::path::Path;

use crate::error::{EmissionError, Result};
use crate::numeric::{self, EXP_GUARD};

/// Below this `|alpha - gamma| t` the exponential moment uses its confluent form.
const OU_CONFLUENCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseCorrelator {
    White,
    /// `f(s) = (gamma/2) exp(-gamma |s|)`.
    ExponentialOu {
        gamma: f64,
    },
    /// `f(s) = exp(-s^2 / 2 tau^2) / (tau sqrt(2 pi))`.
    GaussianWindow {
        tau: f64,
    },
    Tabulated(TabulatedSpectrum),
}

impl NoiseCorrelator {
    pub fn exponential(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(EmissionError::invalid("gamma", "must be positive"));
        }
        Ok(NoiseCorrelator::ExponentialOu { gamma })
    }

    pub fn gaussian(tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(EmissionError::invalid("tau", "must be positive"));
        }
        Ok(NoiseCorrelator::GaussianWindow { tau })
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseCorrelator::White => "white",
            NoiseCorrelator::ExponentialOu { .. } => "exponential_ou",
            NoiseCorrelator::GaussianWindow { .. } => "gaussian_window",
            NoiseCorrelator::Tabulated(_) => "tabulated",
        }
    }

    /// Characteristic correlation time [same time unit as the parameters].
    pub fn correlation_time(&self) -> Option<f64> {
        match self {
            NoiseCorrelator::White => None,
            NoiseCorrelator::ExponentialOu { gamma } => Some(1.0 / gamma),
            NoiseCorrelator::GaussianWindow { tau } => Some(*tau),
            NoiseCorrelator::Tabulated(tab) => {
                Some(2.0 * PI / (tab.omega_max() - tab.omega_min()).max(f64::MIN_POSITIVE))
            }
        }
    }

    /// Re-express the correlator in a time unit of `time_unit` seconds.
    pub fn rescaled(&self, time_unit: f64) -> Self {
        match self {
            NoiseCorrelator::White => NoiseCorrelator::White,
            NoiseCorrelator::ExponentialOu { gamma } => NoiseCorrelator::ExponentialOu {
                gamma: gamma * time_unit,
            },
            NoiseCorrelator::GaussianWindow { tau } => NoiseCorrelator::GaussianWindow {
                tau: tau / time_unit,
            },
            NoiseCorrelator::Tabulated(tab) => NoiseCorrelator::Tabulated(tab.rescaled(time_unit)),
        }
    }

    /// Correlation function `f(s)`.
    pub fn f(&self, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(EmissionError::invalid("s", "must be finite"));
        }
        match self {
            NoiseCorrelator::White => Err(EmissionError::UnsupportedPointwise),
            NoiseCorrelator::ExponentialOu { gamma } => Ok(0.5 * gamma * (-gamma * s.abs()).exp()),
            NoiseCorrelator::GaussianWindow { tau } => {
                Ok((-(s * s) / (2.0 * tau * tau)).exp() / (tau * (2.0 * PI).sqrt()))
            }
            NoiseCorrelator::Tabulated(tab) => Ok(tab.correlation(s)),
        }
    }

    /// Spectrum `f~(omega) = int f(s) exp(i omega s) ds`.
    pub fn f_tilde(&self, omega: f64) -> Result<f64> {
        if !omega.is_finite() {
            return Err(EmissionError::invalid("omega", "must be finite"));
        }
        match self {
            NoiseCorrelator::White => Ok(1.0),
            NoiseCorrelator::ExponentialOu { gamma } => {
                Ok(gamma * gamma / (gamma * gamma + omega * omega))
            }
            NoiseCorrelator::GaussianWindow { tau } => Ok((-0.5 * omega * omega * tau * tau).exp()),
            NoiseCorrelator::Tabulated(tab) => tab.value(omega),
        }
    }

    /// Truncated Laplace moment `F_t(alpha) = int_0^t f(x) exp(alpha x) dx`.
    ///
    /// White noise uses the symmetric-delta convention `int_0^t delta = 1/2`.
    pub fn truncated_moment(&self, alpha: Complex64, t: f64) -> Result<Complex64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(EmissionError::invalid("t", "must be finite and >= 0"));
        }
        if t == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        match self {
            NoiseCorrelator::White => Ok(Complex64::new(0.5, 0.0)),
            NoiseCorrelator::ExponentialOu { gamma } => {
                let y = alpha - gamma;
                let exponent = y.re * t;
                if exponent > EXP_GUARD {
                    return Err(EmissionError::Overflow {
                        exponent,
                        guard: EXP_GUARD,
                    });
                }
                if y.norm() * t < OU_CONFLUENCE {
                    return Ok(Complex64::new(0.5 * gamma * t, 0.0));
                }
                Ok(numeric::exp_integral(y, t) * (0.5 * gamma))
            }
            NoiseCorrelator::GaussianWindow { tau } => {
                let tau = *tau;
                // the integrand is negligible beyond 40 widths past its peak
                let peak = (alpha.re * tau * tau).max(0.0);
                let upper = t.min(peak + 40.0 * tau);
                let growth = alpha.re * upper - upper * upper / (2.0 * tau * tau);
                if growth > EXP_GUARD {
                    return Err(EmissionError::Overflow {
                        exponent: growth,
                        guard: EXP_GUARD,
                    });
                }
                let norm = 1.0 / (tau * (2.0 * PI).sqrt());
                let panel = panel_width(tau, alpha.im.abs());
                let integrand =
                    |x: f64| (alpha * x).exp() * ((-(x * x) / (2.0 * tau * tau)).exp() * norm);
                let scale = numeric::integrate_complex(
                    |x| Complex64::new(integrand(x).norm(), 0.0),
                    0.0,
                    upper,
                    panel,
                    1e-14,
                )
                .re;
                Ok(numeric::integrate_complex(
                    integrand,
                    0.0,
                    upper,
                    panel,
                    1e-12 * scale.max(1e-300),
                ))
            }
            NoiseCorrelator::Tabulated(tab) => tab.truncated_moment(alpha, t),
        }
    }

    /// `f~(0)`, required wherever the zero-frequency term enters.
    pub fn f_tilde_zero(&self) -> Result<f64> {
        self.f_tilde(0.0)
    }
}

fn panel_width(scale: f64, oscillation: f64) -> f64 {
    let mut w = 2.0 * scale;
    if oscillation > 0.0 {
        w = w.min(PI / oscillation);
    }
    w
}

/// Sampled spectrum with monotone piecewise-cubic (Fritsch-Carlson) interpolation.
///
/// The spectrum is even in `omega`; queries use `|omega|`. Outside the table the
/// spectrum is treated as zero by the integral transforms and pointwise queries
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TabulatedPoints", into = "TabulatedPoints")]
pub struct TabulatedSpectrum {
    omega: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TabulatedPoints {
    omega: Vec<f64>,
    value: Vec<f64>,
}

impl TryFrom<TabulatedPoints> for TabulatedSpectrum {
    type Error = EmissionError;
    fn try_from(p: TabulatedPoints) -> Result<Self> {
        TabulatedSpectrum::new(p.omega, p.value)
    }
}

impl From<TabulatedSpectrum> for TabulatedPoints {
    fn from(t: TabulatedSpectrum) -> Self {
        TabulatedPoints {
            omega: t.omega,
            value: t.value,
        }
    }
}

/// Relative slack at the table edges before a query counts as out of range.
const EDGE_SLACK: f64 = 1e-9;

impl TabulatedSpectrum {
    pub fn new(omega: Vec<f64>, value: Vec<f64>) -> Result<Self> {
        if omega.len() != value.len() {
            return Err(EmissionError::invalid("tabulated", "column lengths differ"));
        }
        if omega.len() < 2 {
            return Err(EmissionError::invalid(
                "tabulated",
                "need at least two samples",
            ));
        }
        if omega.iter().chain(value.iter()).any(|v| !v.is_finite()) {
            return Err(EmissionError::invalid("tabulated", "non-finite sample"));
        }
        if omega[0] < 0.0 {
            return Err(EmissionError::invalid(
                "tabulated",
                "frequencies must be >= 0",
            ));
        }
        if omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EmissionError::invalid(
                "tabulated",
                "frequencies must be strictly increasing",
            ));
        }
        if value.iter().any(|v| *v < 0.0) {
            return Err(EmissionError::invalid(
                "tabulated",
                "spectrum must be non-negative",
            ));
        }
        let slope = pchip_slopes(&omega, &value);
        Ok(TabulatedSpectrum {
            omega,
            value,
            slope,
        })
    }

    /// Two-column CSV `omega,f_tilde` with a header row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 {
            return Err(EmissionError::Config(format!(
                "tabulated spectrum needs exactly two columns, found {}",
                headers.len()
            )));
        }
        let mut omega = Vec::new();
        let mut value = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| EmissionError::Config(format!("bad number `{}`: {e}", &rec[i])))
            };
            omega.push(parse(0)?);
            value.push(parse(1)?);
        }
        Self::new(omega, value)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn omega_min(&self) -> f64 {
        self.omega[0]
    }

    pub fn omega_max(&self) -> f64 {
        *self.omega.last().unwrap()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.omega.iter().copied().zip(self.value.iter().copied())
    }

    fn rescaled(&self, time_unit: f64) -> Self {
        let omega: Vec<f64> = self.omega.iter().map(|w| w * time_unit).collect();
        let slope = pchip_slopes(&omega, &self.value);
        TabulatedSpectrum {
            omega,
            value: self.value.clone(),
            slope,
        }
    }

    pub fn value(&self, omega: f64) -> Result<f64> {
        let w = omega.abs();
        let (lo, hi) = (self.omega_min(), self.omega_max());
        let slack = EDGE_SLACK * (hi - lo);
        if w < lo - slack || w > hi + slack {
            return Err(EmissionError::OutOfRange { omega, lo, hi });
        }
        Ok(self.interpolate(w.clamp(lo, hi)))
    }

    fn interpolate(&self, w: f64) -> f64 {
        let i = match self.omega.partition_point(|x| *x <= w) {
            0 => 0,
            n if n >= self.omega.len() => self.omega.len() - 2,
            n => n - 1,
        };
        let (x0, x1) = (self.omega[i], self.omega[i + 1]);
        let h = x1 - x0;
        let s = (w - x0) / h;
        let (y0, y1) = (self.value[i], self.value[i + 1]);
        let (d0, d1) = (self.slope[i], self.slope[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
    }

    /// Integrate `f~(omega) g(omega)` over the table support, panel by panel.
    fn integrate_against<G>(&self, g: G, oscillation: f64) -> Complex64
    where
        G: Fn(f64) -> Complex64,
    {
        let mut parts = Vec::with_capacity(self.omega.len());
        for w in self.omega.windows(2) {
            let (a, b) = (w[0], w[1]);
            let panel = panel_width(0.5 * (b - a), oscillation);
            parts.push(numeric::integrate_complex(
                |x| g(x) * self.interpolate(x),
                a,
                b,
                panel,
                1e-15,
            ));
        }
        numeric::pairwise_sum_c(&parts)
    }

    /// `f(s) = (1/pi) int_0^inf f~(omega) cos(omega s) d omega`.
    fn correlation(&self, s: f64) -> f64 {
        self.integrate_against(|w| Complex64::new((w * s).cos(), 0.0), s.abs())
            .re
            / PI
    }

    fn truncated_moment(&self, alpha: Complex64, t: f64) -> Result<Complex64> {
        let exponent = alpha.re * t;
        if exponent > EXP_GUARD {
            return Err(EmissionError::Overflow {
                exponent,
                guard: EXP_GUARD,
            });
        }
        let i = Complex64::i();
        // int_0^t cos(omega x) e^{alpha x} dx in closed form
        let kernel = |w: f64| {
            (numeric::exp_integral(alpha + i * w, t) + numeric::exp_integral(alpha - i * w, t))
                * 0.5
        };
        Ok(self.integrate_against(kernel, t) / PI)
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
        return d;
    }
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
