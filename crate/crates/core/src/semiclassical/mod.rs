//! Larmor route to the emission spectrum: closed-form semiclassical rates and
//! a Monte-Carlo pipeline that radiates from simulated noisy trajectories.

mod ensemble;
mod synthesis;
mod trajectory;

use num_complex::Complex64;

use crate::error::{EmissionError, Result};
use crate::noise::NoiseCorrelator;
use crate::params::PhysicalParams;
use crate::spectra::{series, Formula, RateSeries, RESONANCE_GUARD};

pub use ensemble::{
    estimate_rate_mc, periodogram, EnsembleResult, EnsembleSpec, Integrator, MotionMode, Window,
    ENSEMBLE_CSV_HEADER,
};
pub use synthesis::generate_colored_noise;
pub use trajectory::{simulate_oscillator, simulate_trajectory, OscillatorState};

/// Noise-driven acceleration of a free charge radiated through the Larmor
/// formula: `(1/2) Gamma_white f~(omega_k)`.
pub fn rate_semiclassical_free(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    series(grid, corr, params, Formula::SemiclassicalFree, |w, _| {
        corr.f_tilde(w)
    })
}

fn resonance_check(omega: f64, omega0: f64) -> Result<()> {
    if omega0 > 0.0 && (omega - omega0).abs() / omega0 < RESONANCE_GUARD {
        return Err(EmissionError::Resonance {
            relative: (omega - omega0).abs() / omega0,
        });
    }
    Ok(())
}

/// Bound charge: `(1/2) Gamma_white f~(omega_k) / (1 - u^2)^2` with `u = omega0/omega_k`.
pub fn rate_semiclassical_harmonic(
    grid: &[f64],
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
) -> Result<RateSeries> {
    let w0 = params.omega0();
    series(
        grid,
        corr,
        params,
        Formula::SemiclassicalHarmonic,
        |w, g| {
            resonance_check(w, w0)?;
            Ok(corr.f_tilde(w)? / (g.u * g.u - 1.0).powi(2))
        },
    )
}

/// Fourier component of the bound-charge acceleration given that of the noise:
/// `(sqrt(lambda) hbar / m) w(omega) omega^2 / (omega^2 - omega0^2)`.
pub fn ft_acceleration_harmonic(
    omega: f64,
    omega0: f64,
    noise_ft_value: Complex64,
    params: &PhysicalParams,
) -> Result<Complex64> {
    if !omega.is_finite() || omega0.is_nan() || omega0 < 0.0 {
        return Err(EmissionError::invalid(
            "omega",
            "must be finite, omega0 >= 0",
        ));
    }
    resonance_check(omega.abs(), omega0)?;
    let transfer = if omega0 == 0.0 {
        1.0
    } else {
        omega * omega / (omega * omega - omega0 * omega0)
    };
    Ok(noise_ft_value * params.drive_amplitude() * transfer)
}
