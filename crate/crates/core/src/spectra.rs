//! Emission-rate formulas.
//!
//! Every rate is returned per unit wavenumber and written as
//! `(1/2) Gamma_white(omega_k) * shape`, where the dimensionless shape depends
//! only on `x = beta omega_k / m`, `u = omega0 / omega_k` and the noise
//! spectrum. Shapes are evaluated in scaled units.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{EmissionError, Result};
use crate::kernels::{g1_modes, KernelOptions, Mode, PoleFamily, Sign};
use crate::noise::NoiseCorrelator;
use crate::numeric::EXP_GUARD;
use crate::params::{to_scaled, PhysicalParams, ScaledParams};
use crate::roots::solve_roots;

/// Relative distance to resonance below which the weak-coupling harmonic
/// formula is rejected.
pub const RESONANCE_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    WhiteBaseline,
    FreeExact,
    HarmonicAsymptotic,
    FreeLimitOfHarmonic,
    PerturbativeHarmonic,
    PerturbativeFree,
    FiniteTime,
    SemiclassicalFree,
    SemiclassicalHarmonic,
    MonteCarlo,
}

impl Formula {
    pub fn tag(self) -> &'static str {
        match self {
            Formula::WhiteBaseline => "white_baseline",
            Formula::FreeExact => "free_exact",
            Formula::HarmonicAsymptotic => "harmonic_asymptotic",
            Formula::FreeLimitOfHarmonic => "free_limit_of_harmonic",
            Formula::PerturbativeHarmonic => "perturbative_harmonic",
            Formula::PerturbativeFree => "perturbative_free",
            Formula::FiniteTime => "finite_time",
            Formula::SemiclassicalFree => "semiclassical_free",
            Formula::SemiclassicalHarmonic => "semiclassical_harmonic",
            Formula::MonteCarlo => "monte_carlo",
        }
    }
}

/// Rate samples over an angular-frequency grid (SI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub omega_k: Vec<f64>,
    pub rate: Vec<f64>,
    pub formula: Formula,
    /// Evaluation time [s] for finite-time rates; one entry per sample when the
    /// series runs over time instead of frequency.
    pub t: Option<Vec<f64>>,
    pub params: PhysicalParams,
    pub correlator: NoiseCorrelator,
}

pub const RATE_CSV_HEADER: &str = "omega_k,rate,formula,t";

impl RateSeries {
    pub fn len(&self) -> usize {
        self.rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rate.is_empty()
    }

    /// Rate per unit angular frequency, `(dGamma/dk) / c`.
    pub fn per_angular_frequency(&self) -> Vec<f64> {
        self.rate.iter().map(|r| r / self.params.c).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(RATE_CSV_HEADER.split(','))?;
        for i in 0..self.len() {
            let t = match &self.t {
                Some(ts) if ts.len() == 1 => format!("{:e}", ts[0]),
                Some(ts) => format!("{:e}", ts[i]),
                None => String::new(),
            };
            wtr.write_record([
                format!("{:e}", self.omega_k[i]),
                format!("{:e}", self.rate[i]),
                self.formula.tag().to_string(),
                t,
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(EmissionError::invalid("omega_k", "grid is empty"));
    }
    for &w in grid {
        if !w.is_finite() {
            return Err(EmissionError::invalid("omega_k", "non-finite frequency"));
        }
        if w <= 0.0 {
            return Err(EmissionError::Divergence {
                omega: w,
                reason: "rates diverge as 1/omega_k at omega_k = 0",
            });
        }
    }
    if grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(EmissionError::invalid(
            "omega_k",
            "grid must be strictly increasing",
        ));
    }
    Ok(())
}

/// Dimensionless groups at one frequency.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Groups {
    /// `beta omega_k / m`
    pub(crate) x: f64,
    /// `omega0 / omega_k`
    pub(crate) u: f64,
}

/// The groups are unit-free, so they are formed from SI values directly; this
/// keeps them bit-identical whichever internal time unit `params` selects.
fn groups(omega_si: f64, params: &PhysicalParams) -> Groups {
    Groups {
        x: params.beta * omega_si / params.m,
        u: params.omega0() / omega_si,
    }
}

pub(crate) fn series<F>(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    formula: Formula,
    shape: F,
) -> Result<RateSeries>
where
    F: Fn(f64, Groups) -> Result<f64>,
{
    validate_grid(grid)?;
    params.validate()?;
    let mut rate = Vec::with_capacity(grid.len());
    for &w in grid {
        let g = groups(w, params);
        rate.push(0.5 * params.white_rate(w) * shape(w, g)?);
    }
    Ok(RateSeries {
        omega_k: grid.to_vec(),
        rate,
        formula,
        t: None,
        params: *params,
        correlator: corr.clone(),
    })
}

/// `Gamma_white = lambda hbar e^2 / (pi^2 eps0 c^2 m^2 omega_k)`.
pub fn rate_white_baseline(grid: &[f64], params: &PhysicalParams) -> Result<RateSeries> {
    series(
        grid,
        &NoiseCorrelator::White,
        params,
        Formula::WhiteBaseline,
        |_, _| Ok(2.0),
    )
}

/// Free particle, large-time limit taken last:
/// `(1/2) Gamma_white [f~(0) + f~(omega_k) / (1 + x^2)]`.
pub fn rate_free_exact(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    let f0 = corr.f_tilde_zero()?;
    series(grid, corr, params, Formula::FreeExact, |w, g| {
        Ok(f0 + corr.f_tilde(w)? / (1.0 + g.x * g.x))
    })
}

/// Bound particle after all transients have decayed:
/// `(1/2) Gamma_white f~(omega_k) / ((u^2 - 1)^2 + x^2)`.
pub fn rate_harmonic_asymptotic(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    series(grid, corr, params, Formula::HarmonicAsymptotic, |w, g| {
        let d = (g.u * g.u - 1.0).powi(2) + g.x * g.x;
        if d == 0.0 {
            return Err(EmissionError::Resonance { relative: 0.0 });
        }
        Ok(corr.f_tilde(w)? / d)
    })
}

/// `omega0 -> 0` of the asymptotic harmonic rate:
/// `(1/2) Gamma_white f~(omega_k) / (1 + x^2)`.
pub fn rate_free_limit_of_harmonic(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    series(grid, corr, params, Formula::FreeLimitOfHarmonic, |w, g| {
        Ok(corr.f_tilde(w)? / (1.0 + g.x * g.x))
    })
}

/// First order in the charge for the oscillator:
/// `(1/2) Gamma_white [(1 + u^2) f~(omega0) + 2 f~(omega_k)] / (2 (1 - u^2)^2)`.
pub fn rate_perturbative_harmonic(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    let w0 = params.omega0();
    let fw0 = corr.f_tilde(w0)?;
    series(grid, corr, params, Formula::PerturbativeHarmonic, |w, g| {
        if w0 > 0.0 && (w - w0).abs() / w0 < RESONANCE_GUARD {
            return Err(EmissionError::Resonance {
                relative: (w - w0).abs() / w0,
            });
        }
        let u2 = g.u * g.u;
        Ok(((1.0 + u2) * fw0 + 2.0 * corr.f_tilde(w)?) / (2.0 * (1.0 - u2).powi(2)))
    })
}

/// First order in the charge for the free particle:
/// `(1/2) Gamma_white [f~(0)/2 + f~(omega_k)]`.
pub fn rate_perturbative_free(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    let f0 = corr.f_tilde_zero()?;
    series(grid, corr, params, Formula::PerturbativeFree, |w, _| {
        Ok(0.5 * f0 + corr.f_tilde(w)?)
    })
}

/// Which term families of the finite-time rate are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteTimeOptions {
    /// Remove every term whose time dependence carries a nonzero frequency.
    pub drop_oscillatory: bool,
    /// Remove terms involving the runaway root (default).
    pub drop_runaway: bool,
}

impl Default for FiniteTimeOptions {
    fn default() -> Self {
        FiniteTimeOptions {
            drop_oscillatory: false,
            drop_runaway: true,
        }
    }
}

impl FiniteTimeOptions {
    pub fn without_oscillatory() -> Self {
        FiniteTimeOptions {
            drop_oscillatory: true,
            drop_runaway: true,
        }
    }
}

/// One bilinear term `a^-_p a^+_q e^{(p+q)t} [F_t(-q) + F_t(-p)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerm {
    pub minus: Mode,
    pub plus: Mode,
}

impl RateTerm {
    pub fn exponent(&self) -> Complex64 {
        self.minus.exponent + self.plus.exponent
    }

    pub fn is_oscillatory(&self, scale: f64) -> bool {
        self.exponent().im.abs() > 1e-12 * scale
    }

    pub fn involves(&self, family: PoleFamily) -> bool {
        self.minus.family == family || self.plus.family == family
    }
}

/// All bilinear terms of `G_1^-(t) int G_1^+ f + G_1^+(t) int G_1^- f` at
/// `omega` (scaled units).
pub fn finite_time_terms(
    omega: f64,
    params: &ScaledParams,
    opts: FiniteTimeOptions,
) -> Result<Vec<RateTerm>> {
    let roots = solve_roots(params)?;
    let kopts = KernelOptions {
        include_runaway: !opts.drop_runaway,
    };
    let minus = g1_modes(Sign::Minus, omega, &roots, params, kopts)?;
    let plus = g1_modes(Sign::Plus, omega, &roots, params, kopts)?;
    let scale = roots.z2.norm().max(omega);
    let mut terms = Vec::with_capacity(minus.len() * plus.len());
    for a in &minus {
        for b in &plus {
            let term = RateTerm {
                minus: *a,
                plus: *b,
            };
            if opts.drop_oscillatory && term.is_oscillatory(scale) {
                continue;
            }
            terms.push(term);
        }
    }
    Ok(terms)
}

/// Finite-time shape `m^2 omega_k^2 d/dt int int G_1^- G_1^+ f` in scaled units.
pub fn finite_time_shape(
    omega: f64,
    t: f64,
    corr: &NoiseCorrelator,
    params: &ScaledParams,
    opts: FiniteTimeOptions,
) -> Result<f64> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(EmissionError::invalid("t", "must be finite and >= 0"));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(EmissionError::invalid("omega_k", "must be positive"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let terms = finite_time_terms(omega, params, opts)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for term in &terms {
        let p = term.minus.exponent;
        let q = term.plus.exponent;
        let e = (p + q) * t;
        if e.re > EXP_GUARD {
            return Err(EmissionError::Overflow {
                exponent: e.re,
                guard: EXP_GUARD,
            });
        }
        let moments = corr.truncated_moment(-q, t)? + corr.truncated_moment(-p, t)?;
        acc += term.minus.coeff * term.plus.coeff * e.exp() * moments;
    }
    Ok(params.m * params.m * omega * omega * acc.re)
}

/// Finite-time rate at one frequency and time (SI in, SI out).
pub fn rate_finite_time(
    omega_k: f64,
    t: f64,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    opts: FiniteTimeOptions,
) -> Result<f64> {
    validate_grid(&[omega_k])?;
    let (s, scale) = to_scaled(params)?;
    let c = corr.rescaled(scale.time_unit);
    let shape = finite_time_shape(
        scale.omega_to_scaled(omega_k),
        scale.time_to_scaled(t),
        &c,
        &s,
        opts,
    )?;
    Ok(0.5 * params.white_rate(omega_k) * shape)
}

pub fn rate_finite_time_series(
    grid: &[f64],
    t: f64,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    opts: FiniteTimeOptions,
) -> Result<RateSeries> {
    validate_grid(grid)?;
    let rate = grid
        .iter()
        .map(|&w| rate_finite_time(w, t, corr, params, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSeries {
        omega_k: grid.to_vec(),
        rate,
        formula: Formula::FiniteTime,
        t: Some(vec![t]),
        params: *params,
        correlator: corr.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(beta: f64, omega0: f64) -> PhysicalParams {
        let base = PhysicalParams::electron(1.0);
        PhysicalParams {
            m: 1.0,
            beta,
            kappa: omega0 * omega0,
            ..base
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn white_baseline_laws() {
        let p = unit_params(1.0, 0.0);
        let r = rate_white_baseline(&[1.0, 2.0], &p).unwrap();
        assert!(rel(r.rate[1], 0.5 * r.rate[0]) < 1e-15);
        let zero = rate_white_baseline(&[1.0], &p.with_lambda(0.0).unwrap()).unwrap();
        assert_eq!(zero.rate[0], 0.0);
        assert!(matches!(
            rate_white_baseline(&[0.0, 1.0], &p),
            Err(EmissionError::Divergence { .. })
        ));
        assert!(rate_white_baseline(&[2.0, 1.0], &p).is_err());
    }

    #[test]
    fn white_baseline_direct_substitution() {
        let p = PhysicalParams::electron(0.01);
        let w = 1e19;
        let r = rate_white_baseline(&[w], &p).unwrap().rate[0];
        let pi2 = std::f64::consts::PI.powi(2);
        let direct = p.lambda * p.hbar * p.e * p.e / (pi2 * p.eps0 * p.c * p.c * p.m * p.m * w);
        assert!(rel(r, direct) < 1e-14);
    }

    #[test]
    fn free_exact_reduces_without_zero_frequency_weight() {
        let tab = crate::noise::TabulatedSpectrum::new(
            vec![0.0, 1.0, 2.0, 4.0],
            vec![0.0, 1.0, 1.0, 0.0],
        )
        .unwrap();
        let corr = NoiseCorrelator::Tabulated(tab);
        let p = unit_params(0.3, 0.0);
        let grid = [0.5, 1.5, 3.0];
        let exact = rate_free_exact(&grid, &corr, &p).unwrap();
        let limit = rate_free_limit_of_harmonic(&grid, &corr, &p).unwrap();
        for (a, b) in exact.rate.iter().zip(&limit.rate) {
            assert!(rel(*a, *b) < 1e-15);
        }
    }

    #[test]
    fn harmonic_asymptotic_special_points() {
        let corr = NoiseCorrelator::exponential(2.0).unwrap();
        let p = unit_params(0.01, 0.8);
        let grid = [0.8];
        let v = rate_harmonic_asymptotic(&grid, &corr, &p).unwrap().rate[0];
        let w0 = 0.8f64;
        let expected =
            p.rate_prefactor() * corr.f_tilde(w0).unwrap() / (p.beta * p.beta * w0.powi(3));
        assert!(rel(v, expected) < 1e-12);

        let white = NoiseCorrelator::White;
        let p0 = unit_params(1.0, 1.0).with_beta(0.0).unwrap();
        let v = rate_harmonic_asymptotic(&[2.0], &white, &p0).unwrap().rate[0];
        assert!(rel(v, 0.5 * p0.white_rate(2.0) * 16.0 / 9.0) < 1e-14);
    }

    #[test]
    fn perturbative_harmonic_resonance_guard() {
        let p = unit_params(0.0, 1.0);
        let err = rate_perturbative_harmonic(&[1.0], &NoiseCorrelator::White, &p).unwrap_err();
        assert!(matches!(err, EmissionError::Resonance { .. }));
        assert!(rate_perturbative_harmonic(&[1.0 + 1e-6], &NoiseCorrelator::White, &p).is_ok());
    }

    #[test]
    fn perturbative_white_reduction() {
        let p = unit_params(0.0, 0.5);
        let white = NoiseCorrelator::White;
        for w in [0.2, 0.9, 3.0] {
            let u = 0.5 / w;
            let v = rate_perturbative_harmonic(&[w], &white, &p).unwrap().rate[0];
            let expected =
                0.5 * p.white_rate(w) * ((1.0 + u * u) + 2.0) / (2.0 * (1.0 - u * u).powi(2));
            assert!(rel(v, expected) < 1e-14);
        }
        let free = rate_perturbative_free(&[1.3], &white, &p).unwrap().rate[0];
        let gw = p.white_rate(1.3);
        assert!(rel(free, 0.75 * gw) < 1e-15);
        assert!(free > 0.5 * gw && free < gw);
    }

    #[test]
    fn finite_time_vanishes_at_start() {
        let p = unit_params(1.0, 0.01);
        let corr = NoiseCorrelator::exponential(1.0).unwrap();
        assert_eq!(
            rate_finite_time(0.3, 0.0, &corr, &p, FiniteTimeOptions::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn finite_time_runaway_overflow() {
        let p = unit_params(1.0, 0.01);
        let opts = FiniteTimeOptions {
            drop_oscillatory: false,
            drop_runaway: false,
        };
        let err = rate_finite_time(0.3, 1e3, &NoiseCorrelator::White, &p, opts).unwrap_err();
        assert!(matches!(err, EmissionError::Overflow { .. }));
    }

    #[test]
    fn free_particle_large_time_equals_exact_free() {
        let p = unit_params(1.0, 0.0);
        let corr = NoiseCorrelator::exponential(0.5).unwrap();
        let t = 400.0;
        for w in [0.05, 0.3, 1.7] {
            let ft = rate_finite_time(w, t, &corr, &p, FiniteTimeOptions::without_oscillatory())
                .unwrap();
            let exact = rate_free_exact(&[w], &corr, &p).unwrap().rate[0];
            assert!(rel(ft, exact) < 1e-10, "w={w}: {ft} vs {exact}");
        }
    }

    #[test]
    fn electron_scale_near_resonance_settles_on_asymptote() {
        // bound frequencies sit eight decades below the runaway root
        let p = PhysicalParams::electron_bound(1e-2, 3.29e15);
        let corr = NoiseCorrelator::White;
        for w in [1e14, 3.16e15] {
            let asym = rate_harmonic_asymptotic(&[w], &corr, &p).unwrap().rate[0];
            let late = rate_finite_time(w, 1e-6, &corr, &p, FiniteTimeOptions::default()).unwrap();
            assert!(rel(late, asym) < 1e-4, "{w}: {late} vs {asym}");
        }
    }

    #[test]
    fn csv_header_is_fixed() {
        let p = unit_params(1.0, 0.0);
        let r = rate_white_baseline(&[1.0, 2.0], &p).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("omega_k,rate,formula,t\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
