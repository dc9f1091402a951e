//! Headline comparisons between the rate formulas.

use serde::{Deserialize, Serialize};

use crate::error::{EmissionError, Result};
use crate::noise::NoiseCorrelator;
use crate::params::{to_scaled, PhysicalParams};
use crate::roots::solve_roots;
use crate::semiclassical::rate_semiclassical_free;
use crate::spectra::{
    rate_finite_time_series, rate_free_exact, rate_free_limit_of_harmonic,
    rate_harmonic_asymptotic, rate_perturbative_free, rate_white_baseline, FiniteTimeOptions,
    RateSeries,
};

/// The five free-particle rates at one frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub omega_k: f64,
    /// Free particle, large-time limit taken last (contains `f~(0)`).
    pub free_exact: f64,
    /// Bound particle at large time, then `omega0 -> 0`.
    pub free_limit_of_harmonic: f64,
    /// First order in the charge, then `omega0 -> 0`.
    pub perturbative_free: f64,
    pub semiclassical_free: f64,
    pub white_baseline: f64,
    /// `(numerator, denominator, ratio)` for every ordered pair of distinct rates.
    pub ratios: Vec<(String, String, f64)>,
    /// `free_exact - free_limit_of_harmonic`.
    pub unphysical_term: f64,
    /// `(1/2) Gamma_white f~(0)`, the expected value of `unphysical_term`.
    pub unphysical_expected: f64,
    /// `perturbative_free - free_limit_of_harmonic`.
    pub perturbative_excess: f64,
}

impl ComparisonRecord {
    pub fn ratio(&self, num: &str, den: &str) -> Option<f64> {
        self.ratios
            .iter()
            .find(|(a, b, _)| a == num && b == den)
            .map(|r| r.2)
    }
}

pub fn compare_orders(
    omega_k: f64,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<ComparisonRecord> {
    let grid = [omega_k];
    let free_exact = rate_free_exact(&grid, corr, params)?.rate[0];
    let limit = rate_free_limit_of_harmonic(&grid, corr, params)?.rate[0];
    let pert = rate_perturbative_free(&grid, corr, params)?.rate[0];
    let semi = rate_semiclassical_free(&grid, corr, params)?.rate[0];
    let white = rate_white_baseline(&grid, params)?.rate[0];
    let named = [
        ("free_exact", free_exact),
        ("free_limit_of_harmonic", limit),
        ("perturbative_free", pert),
        ("semiclassical_free", semi),
        ("white_baseline", white),
    ];
    let mut ratios = Vec::new();
    for (a, x) in &named {
        for (b, y) in &named {
            if a != b {
                ratios.push((a.to_string(), b.to_string(), x / y));
            }
        }
    }
    Ok(ComparisonRecord {
        omega_k,
        free_exact,
        free_limit_of_harmonic: limit,
        perturbative_free: pert,
        semiclassical_free: semi,
        white_baseline: white,
        ratios,
        unphysical_term: free_exact - limit,
        unphysical_expected: 0.5 * params.white_rate(omega_k) * corr.f_tilde_zero()?,
        perturbative_excess: pert - limit,
    })
}

/// Damping of the bound pair, analytic and exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayTimescale {
    /// `omega0^2 beta / (2 m)` [1/s].
    pub analytic_rate: f64,
    /// `-Re z2` from the exact cubic [1/s].
    pub exact_rate: f64,
    /// `1 / analytic_rate` [s]; infinite for a free particle.
    pub time: f64,
    /// Set when `kappa = 0` or `beta = 0`: nothing decays.
    pub infinite: bool,
}

pub fn decay_timescale(params: &PhysicalParams) -> Result<DecayTimescale> {
    params.validate()?;
    let w0 = params.omega0();
    let analytic_rate = w0 * w0 * params.beta / (2.0 * params.m);
    if analytic_rate == 0.0 {
        return Ok(DecayTimescale {
            analytic_rate: 0.0,
            exact_rate: 0.0,
            time: f64::INFINITY,
            infinite: true,
        });
    }
    let (s, scale) = to_scaled(params)?;
    let exact_rate = scale.omega_to_si(solve_roots(&s)?.decay_rate());
    Ok(DecayTimescale {
        analytic_rate,
        exact_rate,
        time: analytic_rate.recip(),
        infinite: false,
    })
}

/// Exponential fit `amplitude * e^{-decay_rate t}` of the distance to the asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub amplitude: f64,
    /// [1/s]
    pub decay_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceScan {
    pub series: RateSeries,
    pub asymptote: f64,
    pub envelope: Option<Envelope>,
    pub warning: Option<String>,
}

/// Least-squares line through `(x, y)`; returns `(intercept, slope)`.
fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

/// Fit the upper envelope of `|deviation|`: the grid is cut into chunks, the
/// peak of each chunk kept, and a line fitted to the log of the peaks.
fn fit_envelope(t: &[f64], deviation: &[f64]) -> std::result::Result<Envelope, String> {
    const CHUNKS: usize = 8;
    let usable: Vec<(f64, f64)> = t
        .iter()
        .zip(deviation)
        .filter(|(ti, d)| **ti > 0.0 && d.abs() > 0.0 && d.is_finite())
        .map(|(a, b)| (*a, b.abs()))
        .collect();
    if usable.len() < 2 * CHUNKS {
        return Err(format!("need at least {} positive-time points", 2 * CHUNKS));
    }
    let size = usable.len() / CHUNKS;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for chunk in usable.chunks(size) {
        let peak = chunk
            .iter()
            .cloned()
            .fold((0.0, 0.0), |best, p| if p.1 > best.1 { p } else { best });
        xs.push(peak.0);
        ys.push(peak.1.ln());
    }
    match linear_fit(&xs, &ys) {
        Some((a, b)) if b < 0.0 => Ok(Envelope {
            amplitude: a.exp(),
            decay_rate: -b,
        }),
        Some(_) => Err("deviation does not decay over the time grid".into()),
        None => Err("degenerate time grid".into()),
    }
}

/// Finite-time rate over `t_grid` with the distance to the asymptotic rate
/// and its exponential envelope.
pub fn convergence_scan(
    omega_k: f64,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    t_grid: &[f64],
    opts: FiniteTimeOptions,
) -> Result<ConvergenceScan> {
    if params.kappa <= 0.0 {
        return Err(EmissionError::invalid(
            "kappa",
            "convergence scan needs a bound charge",
        ));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EmissionError::invalid(
            "t_grid",
            "must be non-empty and strictly increasing",
        ));
    }
    let asymptote = rate_harmonic_asymptotic(&[omega_k], corr, params)?.rate[0];
    let mut rate = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        rate.push(rate_finite_time_series(&[omega_k], t, corr, params, opts)?.rate[0]);
    }
    let deviation: Vec<f64> = rate.iter().map(|r| r - asymptote).collect();
    let (envelope, warning) = match fit_envelope(t_grid, &deviation) {
        Ok(e) => (Some(e), None),
        Err(w) => {
            log::warn!("envelope fit failed: {w}");
            (None, Some(w))
        }
    };
    let mut series = rate_finite_time_series(&[omega_k], t_grid[0], corr, params, opts)?;
    series.omega_k = vec![omega_k; t_grid.len()];
    series.rate = rate;
    series.t = Some(t_grid.to_vec());
    Ok(ConvergenceScan {
        series,
        asymptote,
        envelope,
        warning,
    })
}
