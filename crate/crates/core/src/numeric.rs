//! Small numerical helpers shared by the kernel, noise and oracle modules.

use num_complex::Complex64;

/// Largest exponent accepted before `exp` is considered an overflow.
pub const EXP_GUARD: f64 = 700.0;

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn expm1(z: Complex64) -> Complex64 {
    let (a, b) = (z.re, z.im);
    let half = (0.5 * b).sin();
    let re = a.exp_m1() * b.cos() - 2.0 * half * half;
    let im = a.exp() * b.sin();
    Complex64::new(re, im)
}

/// `(exp(z) - 1) / z`, equal to 1 at the origin.
pub fn exprel(z: Complex64) -> Complex64 {
    if z.norm() < 1e-5 {
        // four Taylor terms reach full double precision here
        Complex64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        expm1(z) / z
    }
}

/// `int_0^t exp(y x) dx`, the building block of every truncated Laplace moment.
pub fn exp_integral(y: Complex64, t: f64) -> Complex64 {
    exprel(y * t) * t
}

/// Pairwise summation with a fixed reduction tree, so the result depends only
/// on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

pub fn pairwise_sum_c(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum_c(&xs[..mid]) + pairwise_sum_c(&xs[mid..])
    }
}

/// Integrate a complex-valued function on `[a, b]`, splitting into panels no
/// wider than `max_panel` and applying double-exponential quadrature to the
/// real and imaginary parts separately.
pub fn integrate_complex<F>(f: F, a: f64, b: f64, max_panel: f64, abs_tol: f64) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let n = ((b - a) / max_panel).ceil().max(1.0) as usize;
    let h = (b - a) / n as f64;
    let tol = abs_tol / n as f64;
    let mut acc = Vec::with_capacity(n);
    for i in 0..n {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == n { b } else { lo + h };
        let re = quadrature::double_exponential::integrate(|x| f(x).re, lo, hi, tol).integral;
        let im = quadrature::double_exponential::integrate(|x| f(x).im, lo, hi, tol).integral;
        acc.push(Complex64::new(re, im));
    }
    pairwise_sum_c(&acc)
}

pub fn integrate_real<F>(f: F, a: f64, b: f64, max_panel: f64, abs_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, max_panel, abs_tol).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_small_argument() {
        let z = Complex64::new(1e-12, -2e-12);
        let v = expm1(z);
        assert!((v - z).norm() < 1e-23);
    }

    #[test]
    fn exprel_continuous_across_switch() {
        for r in [9.99e-6, 1.001e-5] {
            let z = Complex64::new(r * 0.6, r * 0.8);
            let direct = (z.exp() - 1.0) / z;
            assert!((exprel(z) - direct).norm() < 1e-10);
        }
    }

    #[test]
    fn complex_integration_of_exponential() {
        let y = Complex64::new(-0.3, 2.0);
        let v = integrate_complex(|x| (y * x).exp(), 0.0, 5.0, 0.5, 1e-14);
        assert!((v - exp_integral(y, 5.0)).norm() < 1e-12);
    }
}
