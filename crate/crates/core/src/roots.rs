//! Zeros of the characteristic function `H(z) = kappa + z^2 (m - beta z)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EmissionError, Result};
use crate::params::ScaledParams;

/// Pole separation, relative to the slow (non-runaway) frequency scale, below
/// which two poles are treated as one higher-order pole.
pub const CONFLUENCE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// Runaway root (positive real), absent when `beta = 0`.
    pub z1: Option<Complex64>,
    /// Damped oscillatory root with non-negative imaginary part.
    pub z2: Complex64,
    /// Complex conjugate of `z2`.
    pub z3: Complex64,
    pub confluent: bool,
}

impl RootSet {
    pub fn all(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(3);
        if let Some(z1) = self.z1 {
            v.push(z1);
        }
        v.push(self.z2);
        v.push(self.z3);
        v
    }

    /// Damping rate `-Re z2` of the bound pair.
    pub fn decay_rate(&self) -> f64 {
        -self.z2.re
    }
}

pub fn characteristic(z: Complex64, p: &ScaledParams) -> Complex64 {
    z * z * (p.m - z * p.beta) + p.kappa
}

fn characteristic_derivative(z: Complex64, p: &ScaledParams) -> Complex64 {
    z * (2.0 * p.m) - z * z * (3.0 * p.beta)
}

fn check(p: &ScaledParams) -> Result<()> {
    if !(p.m > 0.0 && p.m.is_finite()) {
        return Err(EmissionError::invalid("m", "must be positive"));
    }
    if !(p.beta >= 0.0 && p.beta.is_finite()) {
        return Err(EmissionError::invalid("beta", "must be >= 0"));
    }
    if !(p.kappa >= 0.0 && p.kappa.is_finite()) {
        return Err(EmissionError::invalid("kappa", "must be >= 0"));
    }
    Ok(())
}

fn newton_polish(z: Complex64, p: &ScaledParams) -> Complex64 {
    let d = characteristic_derivative(z, p);
    if d.norm() == 0.0 {
        return z;
    }
    let h = characteristic(z, p);
    let candidate = z - h / d;
    if characteristic(candidate, p).norm() <= h.norm() {
        candidate
    } else {
        z
    }
}

fn classify(z1: Option<Complex64>, z2: Complex64, z3: Complex64) -> RootSet {
    let (z2, z3) = if z2.im >= z3.im { (z2, z3) } else { (z3, z2) };
    RootSet {
        z1,
        z2,
        z3,
        confluent: (z2 - z3).norm() <= CONFLUENCE_THRESHOLD * z2.norm().max(z3.norm()),
    }
}

/// Exact roots: Cardano for the real (runaway) root, then deflation through
/// the Vieta relations and one Newton step per root.
pub fn solve_roots(p: &ScaledParams) -> Result<RootSet> {
    check(p)?;
    if p.beta == 0.0 {
        let w = (p.kappa / p.m).sqrt();
        return Ok(classify(
            None,
            Complex64::new(0.0, w),
            Complex64::new(0.0, -w),
        ));
    }
    // z^3 - a z^2 - b = 0
    let a = p.m / p.beta;
    let b = p.kappa / p.beta;
    let z1 = if b == 0.0 {
        a
    } else {
        // z = y + a/3: y^3 + py + q = 0, discriminant >= 0 for b >= 0
        let pp = -a * a / 3.0;
        let half_q = -(a * a * a / 27.0 + 0.5 * b);
        let disc = half_q * half_q + (pp / 3.0).powi(3);
        let u = (-half_q + disc.max(0.0).sqrt()).cbrt();
        let v = -pp / (3.0 * u);
        let mut z = u + v + a / 3.0;
        for _ in 0..2 {
            let g = p.beta * z * z * z - p.m * z * z - p.kappa;
            let dg = 3.0 * p.beta * z * z - 2.0 * p.m * z;
            if dg != 0.0 {
                z -= g / dg;
            }
        }
        z
    };
    // z2 + z3 = a - z1 = -kappa / (beta z1^2), z2 z3 = kappa / (beta z1)
    let sum = -p.kappa / (p.beta * z1 * z1);
    let prod = p.kappa / (p.beta * z1);
    let disc = prod - 0.25 * sum * sum;
    let (z2, z3) = if disc >= 0.0 {
        let w = disc.sqrt();
        (Complex64::new(0.5 * sum, w), Complex64::new(0.5 * sum, -w))
    } else {
        let w = (-disc).sqrt();
        (
            Complex64::new(0.5 * sum + w, 0.0),
            Complex64::new(0.5 * sum - w, 0.0),
        )
    };
    let z1 = newton_polish(Complex64::new(z1, 0.0), p);
    let z2 = newton_polish(z2, p);
    let z3 = if disc >= 0.0 {
        z2.conj()
    } else {
        newton_polish(z3, p)
    };
    Ok(classify(Some(Complex64::new(z1.re, 0.0)), z2, z3))
}

/// Small-`omega0` approximations `z1 = m/beta`, `z2,3 = -omega0^2 beta/(2m) +- i omega0`.
pub fn approx_roots(p: &ScaledParams) -> Result<RootSet> {
    check(p)?;
    let w0 = p.omega0();
    let re = -w0 * w0 * p.beta / (2.0 * p.m);
    let z1 = (p.beta > 0.0).then(|| Complex64::new(p.m / p.beta, 0.0));
    Ok(classify(
        z1,
        Complex64::new(re, w0),
        Complex64::new(re, -w0),
    ))
}
