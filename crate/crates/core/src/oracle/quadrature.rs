//! Direct quadrature of `d/dt int_0^t int_0^t G_1^-(u) G_1^+(v) f(u - v) du dv`.
//!
//! The double integral is a tensor trapezoid rule on a uniform grid whose
//! diagonal carries the kink of the correlator, so the error has an even
//! expansion in the step and Richardson extrapolation applies. The time
//! derivative is a central difference, Romberg-extrapolated in its own step.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EmissionError, Result};
use crate::kernels::{eval_g, KernelOptions, Sign};
use crate::noise::NoiseCorrelator;
use crate::numeric::pairwise_sum_c;
use crate::params::{to_scaled, PhysicalParams, ScaledParams};
use crate::roots::{solve_roots, RootSet};
use crate::spectra::validate_grid;

/// Relative error estimate above which the extrapolation is declared unconverged.
pub const QUADRATURE_TOLERANCE: f64 = 1e-3;

/// Coarsest admissible panel count.
pub const MIN_GRID_N: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    /// Extrapolated value (SI rate or scaled shape, matching the entry point).
    pub value: f64,
    /// Dimensionless shape `m^2 omega^2 dI/dt`.
    pub shape: f64,
    /// Absolute error estimate on `value`.
    pub error_estimate: f64,
    /// Convergence order observed over three grid levels (2 expected).
    pub observed_order: f64,
    pub grid_n: usize,
}

struct Setup<'a> {
    omega: f64,
    corr: &'a NoiseCorrelator,
    params: &'a ScaledParams,
    roots: RootSet,
}

impl Setup<'_> {
    fn kernel(&self, sign: Sign, t: f64) -> Result<Complex64> {
        eval_g(
            1,
            sign,
            self.omega,
            t,
            &self.roots,
            self.params,
            KernelOptions::default(),
        )
    }

    /// Tensor trapezoid value of the double integral up to `t` with `n` panels.
    fn double_integral(&self, t: f64, n: usize) -> Result<Complex64> {
        let h = t / n as f64;
        let weight = |i: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
        let mut gm = Vec::with_capacity(n + 1);
        let mut gp = Vec::with_capacity(n + 1);
        let mut f = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let u = i as f64 * h;
            gm.push(self.kernel(Sign::Minus, u)? * weight(i));
            gp.push(self.kernel(Sign::Plus, u)? * weight(i));
            f.push(self.corr.f(u)?);
        }
        let rows: Vec<Complex64> = (0..=n)
            .into_par_iter()
            .map(|i| {
                let inner: Vec<Complex64> = (0..=n).map(|j| gp[j] * f[i.abs_diff(j)]).collect();
                gm[i] * pairwise_sum_c(&inner)
            })
            .collect();
        Ok(pairwise_sum_c(&rows) * h * h)
    }

    fn derivative(&self, t: f64, delta: f64, n: usize) -> Result<Complex64> {
        let hi = self.double_integral(t + delta, n)?;
        let lo = self.double_integral(t - delta, n)?;
        Ok((hi - lo) / (2.0 * delta))
    }
}

fn richardson(coarse: Complex64, fine: Complex64) -> Complex64 {
    (fine * 4.0 - coarse) / 3.0
}

/// Two Richardson stages over three halvings of a step with an even error series.
fn romberg(levels: [Complex64; 3]) -> Complex64 {
    let a = richardson(levels[0], levels[1]);
    let b = richardson(levels[1], levels[2]);
    (b * 16.0 - a) / 15.0
}

/// Quadrature shape in scaled units; `corr` must already be rescaled.
pub fn rate_quadrature_scaled(
    omega: f64,
    t: f64,
    corr: &NoiseCorrelator,
    params: &ScaledParams,
    grid_n: usize,
) -> Result<QuadratureResult> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(EmissionError::invalid("omega_k", "must be positive"));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(EmissionError::invalid("t", "must be positive"));
    }
    if grid_n < MIN_GRID_N {
        return Err(EmissionError::invalid("grid_n", "must be at least 64"));
    }
    corr.f(0.0)?;
    let setup = Setup {
        omega,
        corr,
        params,
        roots: solve_roots(params)?,
    };
    let fastest = [
        omega,
        params.omega0(),
        corr.correlation_time().map_or(0.0, |c| 1.0 / c),
        1.0,
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    let delta = (0.25 * t).min(0.25 / fastest);

    // rows: derivative steps delta, delta/2, delta/4; columns: n, 2n, 4n
    let mut table = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (r, d) in [delta, 0.5 * delta, 0.25 * delta].into_iter().enumerate() {
        for (c, n) in [grid_n, 2 * grid_n, 4 * grid_n].into_iter().enumerate() {
            table[r][c] = setup.derivative(t, d, n)?;
        }
    }
    let grid_fine = table.map(|row| richardson(row[1], row[2]));
    let grid_coarse = table.map(|row| richardson(row[0], row[1]));
    let best = romberg(grid_fine);
    let alternative = romberg(grid_coarse);
    let step_only = richardson(grid_fine[1], grid_fine[2]);
    let steps = (table[2][0] - table[2][1]).re / (table[2][1] - table[2][2]).re;
    let observed_order = steps.abs().log2();

    let factor = params.m * params.m * omega * omega;
    let shape = factor * best.re;
    let error = factor * ((best - alternative).re.abs() + (step_only - best).re.abs());
    if !shape.is_finite() || error > QUADRATURE_TOLERANCE * shape.abs() {
        return Err(EmissionError::ToleranceNotMet {
            target: QUADRATURE_TOLERANCE,
            achieved: error / shape.abs(),
            estimate: shape,
        });
    }
    Ok(QuadratureResult {
        value: shape,
        shape,
        error_estimate: error,
        observed_order,
        grid_n,
    })
}

/// Quadrature rate at one frequency and time (SI in, SI out).
pub fn rate_quadrature(
    omega_k: f64,
    t: f64,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    grid_n: usize,
) -> Result<QuadratureResult> {
    validate_grid(&[omega_k])?;
    let (s, scale) = to_scaled(params)?;
    let c = corr.rescaled(scale.time_unit);
    let r = rate_quadrature_scaled(
        scale.omega_to_scaled(omega_k),
        scale.time_to_scaled(t),
        &c,
        &s,
        grid_n,
    )?;
    let prefactor = 0.5 * params.white_rate(omega_k);
    Ok(QuadratureResult {
        value: prefactor * r.shape,
        error_estimate: prefactor * r.error_estimate,
        ..r
    })
}
