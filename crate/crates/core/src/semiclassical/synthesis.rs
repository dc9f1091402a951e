//! Sampled noise realizations with a prescribed correlator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use super::ensemble::EnsembleSpec;
use crate::error::{EmissionError, Result};
use crate::noise::NoiseCorrelator;

/// Independent random stream for one noise component of one trajectory.
pub(crate) fn component_rng(master_seed: u64, trajectory: usize, component: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory as u64 * 3 + component as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn white(n: usize, dt: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let sd = dt.recip().sqrt();
    (0..n).map(|_| sd * normal(rng)).collect()
}

/// Exact discretization of the Ornstein-Uhlenbeck process with
/// `f(s) = (gamma/2) e^{-gamma |s|}`, started from its stationary law.
fn ornstein_uhlenbeck(n: usize, dt: f64, gamma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let rho = (-gamma * dt).exp();
    let var = 0.5 * gamma;
    let innovation = (var * -(-2.0 * gamma * dt).exp_m1()).sqrt();
    let mut out = Vec::with_capacity(n);
    let mut x = var.sqrt() * normal(rng);
    for _ in 0..n {
        out.push(x);
        x = rho * x + innovation * normal(rng);
    }
    out
}

/// Circulant spectral synthesis on twice the requested length, so the
/// periodic wrap-around does not correlate the two ends of the series.
fn spectral(n: usize, dt: f64, corr: &NoiseCorrelator, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let m = 2 * n;
    let dw = 2.0 * std::f64::consts::PI / (m as f64 * dt);
    let norm = (m as f64 * dt).recip();
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..=m / 2 {
        let sd = (corr.f_tilde(k as f64 * dw)?.max(0.0) * norm).sqrt();
        if k == 0 || k == m / 2 {
            c[k] = Complex64::new(sd * normal(rng), 0.0);
        } else {
            let z =
                Complex64::new(normal(rng), normal(rng)) * (sd * std::f64::consts::FRAC_1_SQRT_2);
            c[k] = z;
            c[m - k] = z.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut c);
    Ok(c.into_iter().take(n).map(|z| z.re).collect())
}

/// Three noise components for trajectory `trajectory`, sampled at `spec.dt`.
pub fn generate_colored_noise(
    corr: &NoiseCorrelator,
    spec: &EnsembleSpec,
    trajectory: usize,
) -> Result<[Vec<f64>; 3]> {
    let n = spec.samples()?;
    let dt = spec.dt;
    if let NoiseCorrelator::Tabulated(table) = corr {
        let nyquist = std::f64::consts::PI / dt;
        if table.omega_min() > 0.0 || table.omega_max() < nyquist {
            return Err(EmissionError::Unsupported(format!(
                "tabulated spectrum must cover [0, {nyquist}] rad/s for synthesis"
            )));
        }
    }
    let mut out: [Vec<f64>; 3] = Default::default();
    for (comp, slot) in out.iter_mut().enumerate() {
        let mut rng = component_rng(spec.master_seed, trajectory, comp);
        *slot = match corr {
            NoiseCorrelator::White => white(n, dt, &mut rng),
            NoiseCorrelator::ExponentialOu { gamma } => ornstein_uhlenbeck(n, dt, *gamma, &mut rng),
            NoiseCorrelator::GaussianWindow { .. } | NoiseCorrelator::Tabulated(_) => {
                spectral(n, dt, corr, &mut rng)?
            }
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::TabulatedSpectrum;
    use crate::semiclassical::ensemble::{Integrator, Window};

    fn spec(dt: f64, t: f64) -> EnsembleSpec {
        EnsembleSpec {
            dt,
            t_total: t,
            n_traj: 2,
            master_seed: 7,
            integrator: Integrator::ExactFree,
            window: Window::Rectangular,
            n_segments: 1,
            bins_per_band: 1,
        }
    }

    fn autocovariance(x: &[f64], lag: usize) -> (f64, f64) {
        let n = x.len() - lag;
        let prods: Vec<f64> = (0..n).map(|i| x[i] * x[i + lag]).collect();
        let mean = prods.iter().sum::<f64>() / n as f64;
        (
            mean,
            prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n as f64,
        )
    }

    #[test]
    fn ou_autocorrelation_at_one_correlation_time() {
        let gamma = 2.0;
        let dt = 0.05;
        let corr = NoiseCorrelator::exponential(gamma).unwrap();
        let s = spec(dt, 1e6 * dt);
        let x = &generate_colored_noise(&corr, &s, 0).unwrap()[0];
        let lag = (1.0 / (gamma * dt)).round() as usize;
        let (c, var) = autocovariance(x, lag);
        let expected = 0.5 * gamma * (-1.0f64).exp();
        // samples within one correlation time are dependent: inflate the
        // naive standard error by the integrated autocorrelation time
        let tau_int = 1.0 + 2.0 / (gamma * dt);
        let se = (var * tau_int / x.len() as f64).sqrt();
        assert!(
            (c - expected).abs() < 3.0 * se,
            "{c} vs {expected} (se {se})"
        );
    }

    #[test]
    fn white_variance_matches_delta_normalization() {
        let dt = 0.01;
        let s = spec(dt, 1e6 * dt);
        let x = &generate_colored_noise(&NoiseCorrelator::White, &s, 1).unwrap()[2];
        let (c, var) = autocovariance(x, 0);
        let se = (var / x.len() as f64).sqrt();
        assert!((c - 1.0 / dt).abs() < 3.0 * se);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let corr = NoiseCorrelator::gaussian(0.3).unwrap();
        let s = spec(0.01, 10.24);
        let a = generate_colored_noise(&corr, &s, 3).unwrap();
        let b = generate_colored_noise(&corr, &s, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_colored_noise(&corr, &s, 4).unwrap();
        assert_ne!(a[0], c[0]);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn gaussian_synthesis_variance() {
        let tau = 0.5;
        let corr = NoiseCorrelator::gaussian(tau).unwrap();
        let s = spec(0.02, 2e5 * 0.02);
        let x = &generate_colored_noise(&corr, &s, 0).unwrap()[1];
        let (c0, _) = autocovariance(x, 0);
        let (c1, _) = autocovariance(x, 25);
        let f0 = corr.f(0.0).unwrap();
        let f1 = corr.f(0.5).unwrap();
        // about 4000 independent correlation times
        assert!((c0 - f0).abs() < 0.05 * f0, "{c0} vs {f0}");
        assert!((c1 - f1).abs() < 0.05 * f0, "{c1} vs {f1}");
    }

    #[test]
    fn partial_table_is_unsupported() {
        let table = TabulatedSpectrum::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.1]).unwrap();
        let corr = NoiseCorrelator::Tabulated(table);
        let err = generate_colored_noise(&corr, &spec(0.01, 1.0), 0).unwrap_err();
        assert!(matches!(err, EmissionError::Unsupported(_)));
    }
}
