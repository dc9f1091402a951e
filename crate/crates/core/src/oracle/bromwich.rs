//! Trapezoidal inversion of a rational Laplace transform along `Re z = c`.
//!
//! The transform `z^k / D(z)` is rebuilt from the physical coefficients, never
//! from the roots. Its leading large-`|z|` behaviour is removed with an
//! expansion in `1/(z - s)` whose inverse transform is known in closed form,
//! leaving a rapidly decaying remainder for the trapezoid rule. The step is
//! chosen so that the aliased copies of the kernel are suppressed by about
//! `e^{-36}` relative to the sampled value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EmissionError, Result};
use crate::kernels::Sign;
use crate::numeric::EXP_GUARD;
use crate::params::ScaledParams;
use crate::roots::solve_roots;

/// Which kernel to invert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelId {
    /// `1 / (z^n H(z))`.
    F(usize),
    /// `z^n / ((z +- i omega) H(z))`.
    G { n: usize, sign: Sign },
    /// `z^2 / ((z s1 i omega)(z s2 i omega') H(z))`.
    Gpm { signs: (Sign, Sign) },
}

/// Field frequencies used by the `G` kernels (scaled units).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelArgs {
    pub omega: f64,
    pub omega_prime: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BromwichResult {
    pub value: Complex64,
    /// Estimated discretization plus truncation error (absolute).
    pub error_estimate: f64,
    /// Largest `|Im z|` sampled.
    pub cutoff: f64,
    /// Number of contour nodes evaluated.
    pub nodes: usize,
}

/// Number of asymptotic terms removed before the trapezoid rule.
const ASYMPTOTIC_TERMS: usize = 8;
/// Aliasing suppression exponent.
const ALIAS_EXPONENT: f64 = 36.0;
/// Relative size of the neglected tail at which the sum stops.
const TAIL_TOLERANCE: f64 = 1e-16;

type Poly = Vec<Complex64>;

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Poly {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

fn linear(root: Complex64) -> Poly {
    vec![-root, Complex64::new(1.0, 0.0)]
}

/// Numerator power and denominator coefficients (ascending) of the transform.
fn rational(kernel: KernelId, args: KernelArgs, p: &ScaledParams) -> Result<(usize, Poly)> {
    let h = vec![
        Complex64::new(p.kappa, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(p.m, 0.0),
        Complex64::new(-p.beta, 0.0),
    ];
    let check = |w: f64| {
        if w > 0.0 && w.is_finite() {
            Ok(())
        } else {
            Err(EmissionError::invalid("omega_k", "must be positive"))
        }
    };
    match kernel {
        KernelId::F(n) => {
            if n > 2 {
                return Err(EmissionError::invalid(
                    "n",
                    "F_n is defined for n = 0, 1, 2",
                ));
            }
            let mut d = h;
            for _ in 0..n {
                d = poly_mul(&d, &linear(Complex64::new(0.0, 0.0)));
            }
            Ok((0, d))
        }
        KernelId::G { n, sign } => {
            if n > 1 {
                return Err(EmissionError::invalid("n", "G_n is defined for n = 0, 1"));
            }
            check(args.omega)?;
            Ok((n, poly_mul(&h, &linear(sign.field_pole(args.omega)))))
        }
        KernelId::Gpm { signs } => {
            check(args.omega)?;
            check(args.omega_prime)?;
            let d = poly_mul(&h, &linear(signs.0.field_pole(args.omega)));
            Ok((
                2,
                poly_mul(&d, &linear(signs.1.field_pole(args.omega_prime))),
            ))
        }
    }
}

/// Power series of `w^{deg-k} (1 + s w)^k / D~(w)` where `z = s + 1/w`, i.e. the
/// coefficients `c_i` of `z^k / D(z) = sum_i c_i (z - s)^{-(deg - k + i)}`.
fn asymptotic_coefficients(k: usize, d: &[Complex64], s: f64, terms: usize) -> Vec<Complex64> {
    let deg = d.len() - 1;
    let one = Complex64::new(1.0, 0.0);
    let shift = vec![one, Complex64::new(s, 0.0)];
    // D~(w) = sum_j d_j (1 + s w)^j w^{deg - j}
    let mut dt = vec![Complex64::new(0.0, 0.0); deg + 1];
    let mut pow = vec![one];
    for (j, dj) in d.iter().enumerate() {
        for (i, c) in pow.iter().enumerate() {
            dt[i + deg - j] += dj * c;
        }
        pow = poly_mul(&pow, &shift);
    }
    let mut num = vec![one];
    for _ in 0..k {
        num = poly_mul(&num, &shift);
    }
    num.resize(terms.max(num.len()), Complex64::new(0.0, 0.0));
    let mut out = Vec::with_capacity(terms);
    for i in 0..terms {
        let mut acc = num[i];
        for (j, c) in out.iter().enumerate() {
            if i - j < dt.len() {
                acc -= dt[i - j] * c;
            }
        }
        out.push(acc / dt[0]);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

/// Inverse Laplace transform of `kernel` at time `t` on the line `Re z = abscissa`.
///
/// The abscissa must lie strictly right of every singularity, including the
/// runaway root, so the result always contains the runaway contribution.
/// `max_nodes` caps the number of contour evaluations.
pub fn bromwich_numeric(
    kernel: KernelId,
    args: KernelArgs,
    t: f64,
    params: &ScaledParams,
    abscissa: f64,
    max_nodes: usize,
) -> Result<BromwichResult> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(EmissionError::invalid("t", "must be finite and >= 0"));
    }
    let (k, d) = rational(kernel, args, params)?;
    let roots = solve_roots(params)?;
    let rightmost = roots.all().iter().map(|z| z.re).fold(0.0f64, f64::max);
    if !(abscissa.is_finite() && abscissa > rightmost) {
        return Err(EmissionError::InvalidContour {
            abscissa,
            rightmost,
        });
    }
    if abscissa * t > EXP_GUARD {
        return Err(EmissionError::Overflow {
            exponent: abscissa * t,
            guard: EXP_GUARD,
        });
    }
    let margin = abscissa - rightmost;
    let s = abscissa - 1.0;
    let deg = d.len() - 1;
    let lowest = deg - k;
    let coeffs = asymptotic_coefficients(k, &d, s, ASYMPTOTIC_TERMS);

    // closed-form inverse of the subtracted expansion
    let mut tail_part = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate() {
        let j = lowest + i;
        tail_part += c * t.powi(j as i32 - 1) / factorial(j - 1);
    }
    tail_part *= (s * t).exp();

    let remainder = |y: f64| {
        let z = Complex64::new(abscissa, y);
        let full = z.powu(k as u32) / poly_eval(&d, z);
        let w = 1.0 / (z - s);
        let mut wp = w.powu(lowest as u32);
        let mut q = Complex64::new(0.0, 0.0);
        for c in &coeffs {
            q += c * wp;
            wp *= w;
        }
        (full - q) * Complex64::new(0.0, y * t).exp()
    };

    let period = t + ALIAS_EXPONENT / margin;
    let h = 2.0 * std::f64::consts::PI / period;
    // the remainder decays like |y|^{-decay}
    let decay = (lowest + ASYMPTOTIC_TERMS) as f64;
    let radius = roots
        .all()
        .iter()
        .map(|z| (z - s).norm())
        .chain([args.omega + s.abs(), args.omega_prime + s.abs()])
        .fold(1.0f64, f64::max);

    let mut acc = remainder(0.0);
    let mut nodes = 1usize;
    let mut n = 1usize;
    let mut tail_estimate;
    loop {
        let y = n as f64 * h;
        let pair = remainder(y) + remainder(-y);
        acc += pair;
        nodes += 2;
        // tail of int_y^inf |r| dy ~ |r(y)| y / (decay - 1), in units of h
        tail_estimate = pair.norm() * y / ((decay - 1.0) * h);
        if y > 4.0 * radius && tail_estimate <= TAIL_TOLERANCE * acc.norm().max(f64::MIN_POSITIVE) {
            break;
        }
        if nodes >= max_nodes {
            break;
        }
        n += 1;
    }
    let scale = (abscissa * t).exp() * h / (2.0 * std::f64::consts::PI);
    let value = acc * scale + tail_part;
    let alias = (-ALIAS_EXPONENT).exp() * (value.norm() + tail_part.norm());
    let error_estimate = tail_estimate * scale + alias + f64::EPSILON * (acc.norm() * scale);
    if nodes >= max_nodes && tail_estimate * scale > 1e-6 * value.norm() {
        return Err(EmissionError::ToleranceNotMet {
            target: 1e-6,
            achieved: tail_estimate * scale / value.norm().max(f64::MIN_POSITIVE),
            estimate: value.re,
        });
    }
    Ok(BromwichResult {
        value,
        error_estimate,
        cutoff: n as f64 * h,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{eval_f, eval_g, eval_gpm, KernelOptions};

    const RUN: KernelOptions = KernelOptions {
        include_runaway: true,
    };

    fn line(p: &ScaledParams, t: f64) -> f64 {
        let r = solve_roots(p).unwrap();
        r.z1.map(|z| z.re).unwrap_or(0.0) + (2.0 / t.max(1.0)).min(0.5)
    }

    #[test]
    fn expansion_reproduces_transform() {
        let p = ScaledParams::unit(1.0, 0.3);
        let (k, d) = rational(
            KernelId::G {
                n: 1,
                sign: Sign::Plus,
            },
            KernelArgs {
                omega: 0.7,
                omega_prime: 0.0,
            },
            &p,
        )
        .unwrap();
        let s = 0.2;
        let c = asymptotic_coefficients(k, &d, s, 30);
        let z = Complex64::new(3.0, 40.0);
        let w = 1.0 / (z - s);
        let series: Complex64 = c
            .iter()
            .enumerate()
            .map(|(i, ci)| ci * w.powu((d.len() - 1 - k + i) as u32))
            .sum();
        let exact = z.powu(k as u32) / poly_eval(&d, z);
        assert!((series - exact).norm() < 1e-14 * exact.norm());
    }

    #[test]
    fn f0_against_residues() {
        let p = ScaledParams::unit(1.0, 1e-8);
        let r = solve_roots(&p).unwrap();
        let t = 10.0;
        let b = bromwich_numeric(
            KernelId::F(0),
            KernelArgs::default(),
            t,
            &p,
            line(&p, t),
            1 << 22,
        )
        .unwrap();
        let v = eval_f(0, t, &r, &p, RUN).unwrap();
        assert!(
            (b.value - v).norm() <= 1e-10 * v.norm(),
            "{} vs {}",
            b.value,
            v
        );
    }

    #[test]
    fn all_kernels_against_residues() {
        let p = ScaledParams::unit(1.0, 0.04);
        let r = solve_roots(&p).unwrap();
        let args = KernelArgs {
            omega: 0.5,
            omega_prime: 1.3,
        };
        for t in [0.3, 1.0, 3.0] {
            let c = line(&p, t);
            for n in 0..3 {
                let b = bromwich_numeric(KernelId::F(n), args, t, &p, c, 1 << 22).unwrap();
                let v = eval_f(n, t, &r, &p, RUN).unwrap();
                assert!(
                    (b.value - v).norm() <= 1e-9 * v.norm().max(1e-3),
                    "F{n} t={t}"
                );
            }
            for n in 0..2 {
                for sign in [Sign::Plus, Sign::Minus] {
                    let b =
                        bromwich_numeric(KernelId::G { n, sign }, args, t, &p, c, 1 << 22).unwrap();
                    let v = eval_g(n, sign, args.omega, t, &r, &p, RUN).unwrap();
                    assert!(
                        (b.value - v).norm() <= 1e-9 * v.norm().max(1e-3),
                        "G{n} t={t}"
                    );
                }
            }
            for signs in [(Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Minus)] {
                let b = bromwich_numeric(KernelId::Gpm { signs }, args, t, &p, c, 1 << 22).unwrap();
                let v = eval_gpm(signs, args.omega, args.omega_prime, t, &r, &p, RUN).unwrap();
                assert!(
                    (b.value - v).norm() <= 1e-9 * v.norm().max(1e-3),
                    "Gpm t={t}"
                );
            }
        }
    }

    #[test]
    fn contour_left_of_runaway_is_rejected() {
        let p = ScaledParams::unit(1.0, 1e-4);
        let err = bromwich_numeric(KernelId::F(0), KernelArgs::default(), 1.0, &p, 0.5, 1000)
            .unwrap_err();
        assert!(matches!(err, EmissionError::InvalidContour { .. }));
    }

    #[test]
    fn free_particle_closed_form() {
        // 1/(z^2 (1 - z)) inverts to t + 1 - e^t
        let p = ScaledParams::unit(1.0, 0.0);
        let t = 2.0;
        let b =
            bromwich_numeric(KernelId::F(0), KernelArgs::default(), t, &p, 1.5, 1 << 22).unwrap();
        let exact = t + 1.0 - t.exp();
        assert!((b.value.re - exact).abs() < 1e-11 * exact.abs());
        assert!(b.value.im.abs() < 1e-11 * exact.abs());
        assert!(b.error_estimate < 1e-8 * exact.abs());
    }
}
