//! Monte-Carlo estimate of the emission spectrum from simulated trajectories.

use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::synthesis::generate_colored_noise;
use super::trajectory::simulate_trajectory;
use crate::error::{EmissionError, Result};
use crate::noise::NoiseCorrelator;
use crate::numeric::pairwise_sum;
use crate::params::PhysicalParams;

pub const ENSEMBLE_CSV_HEADER: &str = "omega,rate,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Acceleration equals the scaled noise.
    ExactFree,
    /// Exact oscillator propagator with piecewise-constant forcing.
    ExponentialOscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| {
                    let s = (std::f64::consts::PI * i as f64 / n as f64).sin();
                    s * s
                })
                .collect(),
        }
    }

    /// Equivalent noise bandwidth in frequency bins.
    fn noise_bandwidth(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionMode {
    Free,
    Harmonic,
}

impl MotionMode {
    pub fn integrator(self) -> Integrator {
        match self {
            MotionMode::Free => Integrator::ExactFree,
            MotionMode::Harmonic => Integrator::ExponentialOscillator,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Sampling step [s].
    pub dt: f64,
    /// Length of each trajectory [s].
    pub t_total: f64,
    pub n_traj: usize,
    pub master_seed: u64,
    pub integrator: Integrator,
    pub window: Window,
    /// Non-overlapping segments per trajectory for periodogram averaging.
    pub n_segments: usize,
    /// Adjacent frequency bins averaged into one reported band.
    pub bins_per_band: usize,
}

impl EnsembleSpec {
    /// Number of samples per trajectory.
    pub fn samples(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EmissionError::invalid("dt", "must be positive"));
        }
        if !(self.t_total > 0.0 && self.t_total.is_finite()) {
            return Err(EmissionError::invalid("t_total", "must be positive"));
        }
        let n = (self.t_total / self.dt).round();
        if (n * self.dt - self.t_total).abs() > 1e-9 * self.t_total || n < 2.0 {
            return Err(EmissionError::invalid(
                "t_total",
                "must be an integer multiple of dt",
            ));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.samples()?;
        if self.n_traj < 2 {
            return Err(EmissionError::invalid("n_traj", "must be at least 2"));
        }
        if self.n_segments == 0 || n % self.n_segments != 0 {
            return Err(EmissionError::invalid(
                "n_segments",
                "must divide the sample count",
            ));
        }
        if n / self.n_segments < 16 {
            return Err(EmissionError::Statistical(
                "segments shorter than 16 samples".into(),
            ));
        }
        if self.bins_per_band == 0 {
            return Err(EmissionError::invalid(
                "bins_per_band",
                "must be at least 1",
            ));
        }
        Ok(())
    }

    /// Length of one periodogram segment [s].
    pub fn segment_length(&self) -> Result<f64> {
        Ok((self.samples()? / self.n_segments) as f64 * self.dt)
    }

    /// Bin spacing of the periodogram [rad/s].
    pub fn resolution(&self) -> Result<f64> {
        Ok(2.0 * std::f64::consts::PI / self.segment_length()?)
    }
}

/// One-sided power spectral density per unit angular frequency, averaged over
/// `n_segments` non-overlapping windowed segments. Bins `1..L/2` are returned
/// (no DC, no Nyquist), so `sum psd * d_omega` approximates the mean square.
pub fn periodogram(
    x: &[f64],
    dt: f64,
    n_segments: usize,
    window: Window,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n_segments == 0 || !x.len().is_multiple_of(n_segments) || x.len() / n_segments < 4 {
        return Err(EmissionError::invalid(
            "n_segments",
            "must divide the series into segments of >= 4 samples",
        ));
    }
    let len = x.len() / n_segments;
    let w = window.weights(len);
    let norm = std::f64::consts::PI * dt * w.iter().map(|v| v * v).sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(len);
    let bins = len / 2 - 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for seg in x.chunks_exact(len) {
        for ((b, s), wi) in buf.iter_mut().zip(seg).zip(&w) {
            *b = Complex64::new(s * wi * dt, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf[1..=bins]) {
            *a += b.norm_sqr() / norm;
        }
    }
    let dw = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let omega = (1..=bins).map(|j| j as f64 * dw).collect();
    Ok((
        omega,
        acc.into_iter().map(|a| a / n_segments as f64).collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    pub mode: MotionMode,
    pub correlator: NoiseCorrelator,
    pub params: PhysicalParams,
    /// Mean angular frequency of each band [rad/s].
    pub omega: Vec<f64>,
    /// Band-averaged `dGamma/dk` estimate.
    pub rate: Vec<f64>,
    /// Jackknife standard error of `rate`.
    pub stderr: Vec<f64>,
    pub n_traj: usize,
    /// Periodogram bin spacing [rad/s].
    pub resolution: f64,
    /// Equivalent noise bandwidth of one band [rad/s].
    pub bandwidth: f64,
}

impl EnsembleResult {
    /// Bin frequencies averaged into band `b`.
    pub fn band_bins(&self, b: usize) -> Vec<f64> {
        let k = self.spec.bins_per_band;
        (1 + b * k..1 + (b + 1) * k)
            .map(|j| j as f64 * self.resolution)
            .collect()
    }

    /// Average of `f` over the bins of each band, for comparison with a
    /// closed-form rate.
    pub fn band_average<F>(&self, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        (0..self.omega.len())
            .map(|b| {
                let v = f(&self.band_bins(b))?;
                Ok(pairwise_sum(&v) / v.len() as f64)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(ENSEMBLE_CSV_HEADER.split(','))?;
        for i in 0..self.omega.len() {
            wtr.write_record(&[
                format!("{:e}", self.omega[i]),
                format!("{:e}", self.rate[i]),
                format!("{:e}", self.stderr[i]),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Per-bin rate `c P(omega) / (hbar omega)` of one trajectory, band-averaged.
fn trajectory_rates(
    index: usize,
    spec: &EnsembleSpec,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    bands: usize,
) -> Result<Vec<f64>> {
    let noise = generate_colored_noise(corr, spec, index)?;
    let accel = simulate_trajectory(&noise, spec, params)?;
    let larmor =
        params.e * params.e / (6.0 * std::f64::consts::PI * params.eps0 * params.c.powi(3));
    let mut total: Option<(Vec<f64>, Vec<f64>)> = None;
    for a in &accel {
        let (omega, psd) = periodogram(a, spec.dt, spec.n_segments, spec.window)?;
        total = Some(match total {
            None => (omega, psd),
            Some((o, mut t)) => {
                t.iter_mut().zip(&psd).for_each(|(x, y)| *x += y);
                (o, t)
            }
        });
    }
    let (omega, psd) = total.expect("three components");
    let k = spec.bins_per_band;
    Ok((0..bands)
        .map(|b| {
            let r: Vec<f64> = (b * k..(b + 1) * k)
                .map(|j| larmor * params.c * psd[j] / (params.hbar * omega[j]))
                .collect();
            pairwise_sum(&r) / k as f64
        })
        .collect())
}

/// Ensemble estimate of `dGamma/dk` with jackknife standard errors.
pub fn estimate_rate_mc(
    spec: &EnsembleSpec,
    corr: &NoiseCorrelator,
    params: &PhysicalParams,
    mode: MotionMode,
) -> Result<EnsembleResult> {
    spec.validate()?;
    params.validate()?;
    if spec.integrator != mode.integrator() {
        return Err(EmissionError::invalid(
            "integrator",
            "does not match the motion mode",
        ));
    }
    let seg = spec.segment_length()?;
    if let Some(tc) = corr.correlation_time() {
        if seg < 10.0 * tc {
            return Err(EmissionError::Statistical(format!(
                "segment length {seg} s is not long compared with correlation time {tc} s"
            )));
        }
    }
    if mode == MotionMode::Harmonic {
        let w0 = params.omega0();
        if w0.is_nan() || w0 <= 0.0 || seg < 10.0 * 2.0 * std::f64::consts::PI / w0 {
            return Err(EmissionError::Statistical(
                "harmonic mode needs omega0 > 0 and segments spanning >= 10 periods".into(),
            ));
        }
    }
    let bins = spec.samples()? / spec.n_segments / 2 - 1;
    let bands = bins / spec.bins_per_band;
    if bands == 0 {
        return Err(EmissionError::Statistical(
            "no complete frequency band".into(),
        ));
    }
    let per_traj: Vec<Vec<f64>> = (0..spec.n_traj)
        .into_par_iter()
        .map(|i| trajectory_rates(i, spec, corr, params, bands))
        .collect::<Result<_>>()?;

    let n = spec.n_traj as f64;
    let mut rate = Vec::with_capacity(bands);
    let mut stderr = Vec::with_capacity(bands);
    for b in 0..bands {
        let column: Vec<f64> = per_traj.iter().map(|r| r[b]).collect();
        let total = pairwise_sum(&column);
        let mean = total / n;
        // leave-one-out means
        let dev: Vec<f64> = column
            .iter()
            .map(|x| ((total - x) / (n - 1.0) - mean).powi(2))
            .collect();
        let se = ((n - 1.0) / n * pairwise_sum(&dev)).sqrt();
        rate.push(mean);
        stderr.push(se.max(f64::MIN_POSITIVE));
    }
    let resolution = spec.resolution()?;
    let k = spec.bins_per_band;
    let omega = (0..bands)
        .map(|b| resolution * (1 + b * k) as f64 + resolution * (k - 1) as f64 / 2.0)
        .collect();
    Ok(EnsembleResult {
        spec: *spec,
        mode,
        correlator: corr.clone(),
        params: *params,
        omega,
        rate,
        stderr,
        n_traj: spec.n_traj,
        resolution,
        bandwidth: resolution * k as f64 * spec.window.noise_bandwidth(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodogram_of_sinusoid_parseval() {
        let dt = 0.01;
        let n = 4096;
        let x: Vec<f64> = (0..n)
            .map(|i| (37.0 * 2.0 * std::f64::consts::PI * i as f64 / n as f64).sin())
            .collect();
        let (omega, psd) = periodogram(&x, dt, 1, Window::Rectangular).unwrap();
        let dw = omega[0];
        let power: f64 = psd.iter().sum::<f64>() * dw;
        assert!((power - 0.5).abs() < 1e-12);
        let peak = psd.iter().cloned().fold(0.0, f64::max);
        assert_eq!(psd[36], peak);
    }

    #[test]
    fn hann_window_preserves_noise_power() {
        // white sequence: expected psd is flat at var dt / pi
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let dt = 0.1;
        let x: Vec<f64> = (0..1 << 16)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        for window in [Window::Rectangular, Window::Hann] {
            let (_, psd) = periodogram(&x, dt, 64, window).unwrap();
            let mean = psd.iter().sum::<f64>() / psd.len() as f64;
            let expected = dt / std::f64::consts::PI;
            assert!((mean / expected - 1.0).abs() < 0.02, "{window:?} {mean}");
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = EnsembleSpec {
            dt: 0.01,
            t_total: 1.0,
            n_traj: 2,
            master_seed: 0,
            integrator: Integrator::ExactFree,
            window: Window::Rectangular,
            n_segments: 4,
            bins_per_band: 1,
        };
        s.validate().unwrap();
        s.t_total = 1.005;
        assert!(s.validate().is_err());
        s.t_total = 1.0;
        s.n_traj = 1;
        assert!(s.validate().is_err());
        s.n_traj = 2;
        s.n_segments = 3;
        assert!(s.validate().is_err());
    }

    #[test]
    fn mismatched_mode_is_rejected() {
        let s = EnsembleSpec {
            dt: 0.01,
            t_total: 10.24,
            n_traj: 2,
            master_seed: 0,
            integrator: Integrator::ExactFree,
            window: Window::Rectangular,
            n_segments: 1,
            bins_per_band: 1,
        };
        let p = PhysicalParams::electron_bound(1e-16, 100.0);
        let err =
            estimate_rate_mc(&s, &NoiseCorrelator::White, &p, MotionMode::Harmonic).unwrap_err();
        assert!(matches!(err, EmissionError::InvalidParameter { .. }));
    }
}
