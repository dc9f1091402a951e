//! Noise-driven motion without radiation reaction.

use serde::{Deserialize, Serialize};

use super::ensemble::{EnsembleSpec, Integrator};
use crate::error::{EmissionError, Result};
use crate::params::PhysicalParams;

/// Position and velocity of one Cartesian component.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OscillatorState {
    pub x: f64,
    pub v: f64,
}

impl OscillatorState {
    /// `sqrt(omega0^2 x^2 + v^2)`, conserved by the free oscillation.
    pub fn amplitude(&self, omega0: f64) -> f64 {
        (omega0 * omega0 * self.x * self.x + self.v * self.v).sqrt()
    }
}

/// Exact propagation of `x'' = -omega0^2 x + forcing` with forcing held
/// constant over each step. Returns the sampled acceleration and the final
/// state. Fails if the amplitude exceeds the bound that any forcing of the
/// given size can produce.
pub fn simulate_oscillator(
    forcing: &[f64],
    omega0: f64,
    dt: f64,
    initial: OscillatorState,
) -> Result<(Vec<f64>, OscillatorState)> {
    if !(omega0 > 0.0 && omega0.is_finite() && dt > 0.0) {
        return Err(EmissionError::invalid(
            "omega0",
            "must be positive with dt > 0",
        ));
    }
    let (s, c) = (omega0 * dt).sin_cos();
    let w2 = omega0 * omega0;
    let mut state = initial;
    let mut bound = initial.amplitude(omega0);
    let mut out = Vec::with_capacity(forcing.len());
    for &f in forcing {
        out.push(f - w2 * state.x);
        let eq = f / w2;
        let dx = state.x - eq;
        let v = state.v;
        state.x = eq + dx * c + v * s / omega0;
        state.v = v * c - dx * omega0 * s;
        // |d/dt (omega0 x, v)| <= |forcing|
        bound += f.abs() * dt;
        let amp = state.amplitude(omega0);
        if !amp.is_finite() || amp > bound * (1.0 + 1e-9) + f64::MIN_POSITIVE {
            return Err(EmissionError::Integrator(format!(
                "oscillator amplitude {amp} exceeds forcing bound {bound}"
            )));
        }
    }
    Ok((out, state))
}

/// Acceleration of each component for one noise realization, from rest.
pub fn simulate_trajectory(
    noise: &[Vec<f64>; 3],
    spec: &EnsembleSpec,
    params: &PhysicalParams,
) -> Result<[Vec<f64>; 3]> {
    let g = params.drive_amplitude();
    let mut out: [Vec<f64>; 3] = Default::default();
    for (slot, w) in out.iter_mut().zip(noise) {
        *slot = match spec.integrator {
            Integrator::ExactFree => w.iter().map(|x| g * x).collect(),
            Integrator::ExponentialOscillator => {
                let forcing: Vec<f64> = w.iter().map(|x| g * x).collect();
                simulate_oscillator(
                    &forcing,
                    params.omega0(),
                    spec.dt,
                    OscillatorState::default(),
                )?
                .0
            }
        };
    }
    Ok(out)
}
