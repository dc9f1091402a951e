//! Response kernels as residue sums over the poles of their Laplace transforms.
//!
//! Every kernel has the form `int dz/(2 pi i) z^k e^{zt} / D(z)` along a
//! vertical contour right of all poles, with `D` a product of `H(z)`, powers
//! of `z` and field factors `(z +- i omega)`. Poles that lie closer than the
//! confluence threshold are merged and their residues taken from truncated
//! Laurent series, so double and triple poles (the free particle) are exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EmissionError, Result};
use crate::numeric::EXP_GUARD;
use crate::params::ScaledParams;
use crate::roots::{RootSet, CONFLUENCE_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KernelOptions {
    /// Keep the exponentially growing `e^{z1 t}` contribution.
    pub include_runaway: bool,
}

impl KernelOptions {
    pub fn with_runaway() -> Self {
        KernelOptions {
            include_runaway: true,
        }
    }
}

/// Sign of the field pole: `Plus` means a factor `(z + i omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Location of the pole of `1 / (z +- i omega)`.
    pub fn field_pole(self, omega: f64) -> Complex64 {
        Complex64::new(0.0, -self.value() * omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoleFamily {
    Runaway,
    Bound,
    Field,
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub at: Complex64,
    pub order: usize,
    pub family: PoleFamily,
}

/// One exponential mode `coeff * e^{exponent t}` of a kernel with simple poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub exponent: Complex64,
    pub coeff: Complex64,
    pub family: PoleFamily,
}

/// `z^zeros / (lead * prod (z - p)^order)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleExpansion {
    pub zeros_at_origin: usize,
    pub lead: Complex64,
    pub poles: Vec<Pole>,
    pub near_resonance: bool,
}

impl PoleExpansion {
    fn build(
        zeros_at_origin: usize,
        roots: &RootSet,
        params: &ScaledParams,
        extra: &[(Complex64, usize, PoleFamily)],
    ) -> Self {
        let lead = if params.beta > 0.0 {
            Complex64::new(-params.beta, 0.0)
        } else {
            Complex64::new(params.m, 0.0)
        };
        let mut raw: Vec<Pole> = Vec::new();
        if let Some(z1) = roots.z1 {
            raw.push(Pole {
                at: z1,
                order: 1,
                family: PoleFamily::Runaway,
            });
        }
        for z in [roots.z2, roots.z3] {
            raw.push(Pole {
                at: z,
                order: 1,
                family: PoleFamily::Bound,
            });
        }
        for &(at, order, family) in extra {
            if order > 0 {
                raw.push(Pole { at, order, family });
            }
        }
        // Distances are judged against the slow scale of the problem; the runaway
        // root sits near 1 and would swamp bound frequencies many decades below it.
        let slow_scale = raw
            .iter()
            .filter(|p| p.family != PoleFamily::Runaway)
            .map(|p| p.at.norm())
            .fold(0.0, f64::max);
        let tol = CONFLUENCE_THRESHOLD * slow_scale;
        let mut near_resonance = false;
        let mut clusters: Vec<(Vec<Pole>, Complex64)> = Vec::new();
        for pole in raw {
            match clusters
                .iter_mut()
                .find(|(members, _)| members.iter().any(|m| (m.at - pole.at).norm() <= tol))
            {
                Some((members, _)) => members.push(pole),
                None => clusters.push((vec![pole], pole.at)),
            }
        }
        let mut poles = Vec::with_capacity(clusters.len());
        let mut zeros = zeros_at_origin;
        for (members, _) in clusters {
            let order: usize = members.iter().map(|m| m.order).sum();
            let weight: Complex64 = members.iter().map(|m| m.at * m.order as f64).sum();
            let mut at = weight / order as f64;
            let has_field = members.iter().any(|m| m.family == PoleFamily::Field);
            let has_root = members
                .iter()
                .any(|m| matches!(m.family, PoleFamily::Bound | PoleFamily::Runaway));
            if has_field && has_root {
                near_resonance = true;
            }
            let family = members
                .iter()
                .map(|m| m.family)
                .find(|f| *f == PoleFamily::Runaway)
                .or_else(|| {
                    members
                        .iter()
                        .map(|m| m.family)
                        .find(|f| *f == PoleFamily::Bound)
                })
                .unwrap_or(members[0].family);
            let mut order = order;
            if at.norm() <= tol {
                at = Complex64::new(0.0, 0.0);
                let cancel = zeros.min(order);
                zeros -= cancel;
                order -= cancel;
            }
            if order > 0 {
                poles.push(Pole { at, order, family });
            }
        }
        if near_resonance {
            log::warn!(
                "field pole coincides with a root of H(z); using a merged higher-order pole"
            );
        }
        PoleExpansion {
            zeros_at_origin: zeros,
            lead,
            poles,
            near_resonance,
        }
    }

    /// `F_n`: `1 / (z^n H(z))`.
    pub fn f_kernel(n: usize, roots: &RootSet, params: &ScaledParams) -> Self {
        Self::build(
            0,
            roots,
            params,
            &[(Complex64::new(0.0, 0.0), n, PoleFamily::Origin)],
        )
    }

    /// `G_n^sign(k)`: `z^n / ((z +- i omega) H(z))`.
    pub fn g_kernel(
        n: usize,
        sign: Sign,
        omega: f64,
        roots: &RootSet,
        params: &ScaledParams,
    ) -> Self {
        Self::build(
            n,
            roots,
            params,
            &[(sign.field_pole(omega), 1, PoleFamily::Field)],
        )
    }

    /// `G^{s1}_{s2}(k, k')`: `z^2 / ((z s1 i omega)(z s2 i omega') H(z))`.
    pub fn gpm_kernel(
        signs: (Sign, Sign),
        omega: f64,
        omega_prime: f64,
        roots: &RootSet,
        params: &ScaledParams,
    ) -> Self {
        Self::build(
            2,
            roots,
            params,
            &[
                (signs.0.field_pole(omega), 1, PoleFamily::Field),
                (signs.1.field_pole(omega_prime), 1, PoleFamily::Field),
            ],
        )
    }

    fn guard(&self, t: f64, opts: KernelOptions) -> Result<()> {
        for p in &self.poles {
            if p.family == PoleFamily::Runaway && !opts.include_runaway {
                continue;
            }
            let exponent = p.at.re * t;
            if exponent > EXP_GUARD {
                return Err(EmissionError::Overflow {
                    exponent,
                    guard: EXP_GUARD,
                });
            }
        }
        Ok(())
    }

    /// Residue of the kernel at pole `idx`, i.e. the coefficient of `w^{order-1}`
    /// in the Laurent-stripped Taylor series about the pole.
    fn residue(&self, idx: usize, t: f64) -> Complex64 {
        let pole = self.poles[idx];
        let k = pole.order;
        let p = pole.at;
        // z^zeros about p
        let mut series = binomial_shift(self.zeros_at_origin, p, k);
        // e^{(p + w) t}
        let e = p * t;
        let mut exp_series = vec![Complex64::new(0.0, 0.0); k];
        let mut term = e.exp();
        for (j, c) in exp_series.iter_mut().enumerate() {
            *c = term;
            term *= t / (j + 1) as f64;
        }
        series = mul_series(&series, &exp_series);
        for (j, other) in self.poles.iter().enumerate() {
            if j == idx {
                continue;
            }
            let d = p - other.at;
            let inv = geometric_series(d, k);
            for _ in 0..other.order {
                series = mul_series(&series, &inv);
            }
        }
        series[k - 1] / self.lead
    }

    pub fn evaluate(&self, t: f64, opts: KernelOptions) -> Result<Complex64> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(EmissionError::invalid("t", "must be finite and >= 0"));
        }
        self.guard(t, opts)?;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, p) in self.poles.iter().enumerate() {
            if p.family == PoleFamily::Runaway && !opts.include_runaway {
                continue;
            }
            acc += self.residue(i, t);
        }
        Ok(acc)
    }

    /// Exponential modes; requires every retained pole to be simple.
    pub fn modes(&self, opts: KernelOptions) -> Result<Vec<Mode>> {
        let mut out = Vec::with_capacity(self.poles.len());
        for (i, p) in self.poles.iter().enumerate() {
            if p.family == PoleFamily::Runaway && !opts.include_runaway {
                continue;
            }
            if p.order != 1 {
                return Err(EmissionError::Unsupported(format!(
                    "pole of order {} at {} has no single-exponential mode",
                    p.order, p.at
                )));
            }
            let coeff = self.residue(i, 0.0);
            out.push(Mode {
                exponent: p.at,
                coeff,
                family: p.family,
            });
        }
        Ok(out)
    }
}

/// Taylor coefficients of `(p + w)^n` up to `w^{len-1}`.
fn binomial_shift(n: usize, p: Complex64, len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut binom = 1.0;
    for (j, c) in out.iter_mut().enumerate() {
        if j > n {
            break;
        }
        *c = p.powu((n - j) as u32) * binom;
        binom *= (n - j) as f64 / (j + 1) as f64;
    }
    out
}

/// Taylor coefficients of `1 / (d + w)`.
fn geometric_series(d: Complex64, len: usize) -> Vec<Complex64> {
    let inv = d.inv();
    let mut out = Vec::with_capacity(len);
    let mut term = inv;
    for _ in 0..len {
        out.push(term);
        term *= -inv;
    }
    out
}

fn mul_series(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

/// `F_n(t) = int dz/(2 pi i) e^{zt} / (z^n H(z))`, `n` in {0, 1, 2}.
pub fn eval_f(
    n: usize,
    t: f64,
    roots: &RootSet,
    params: &ScaledParams,
    opts: KernelOptions,
) -> Result<Complex64> {
    if n > 2 {
        return Err(EmissionError::invalid(
            "n",
            "F_n is defined for n = 0, 1, 2",
        ));
    }
    PoleExpansion::f_kernel(n, roots, params).evaluate(t, opts)
}

/// `G_n^sign(k, t) = int dz/(2 pi i) z^n e^{zt} / ((z +- i omega_k) H(z))`, `n` in {0, 1}.
pub fn eval_g(
    n: usize,
    sign: Sign,
    omega: f64,
    t: f64,
    roots: &RootSet,
    params: &ScaledParams,
    opts: KernelOptions,
) -> Result<Complex64> {
    if n > 1 {
        return Err(EmissionError::invalid("n", "G_n is defined for n = 0, 1"));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(EmissionError::invalid("omega_k", "must be positive"));
    }
    PoleExpansion::g_kernel(n, sign, omega, roots, params).evaluate(t, opts)
}

/// `G^{s1}_{s2}(k, k', t)`; the first sign belongs to `omega`, the second to `omega_prime`.
pub fn eval_gpm(
    signs: (Sign, Sign),
    omega: f64,
    omega_prime: f64,
    t: f64,
    roots: &RootSet,
    params: &ScaledParams,
    opts: KernelOptions,
) -> Result<Complex64> {
    if !(omega > 0.0 && omega_prime > 0.0) {
        return Err(EmissionError::invalid("omega_k", "must be positive"));
    }
    PoleExpansion::gpm_kernel(signs, omega, omega_prime, roots, params).evaluate(t, opts)
}

/// Exponential modes of `G_1^sign(k, t)`, the only kernel entering the rate.
pub fn g1_modes(
    sign: Sign,
    omega: f64,
    roots: &RootSet,
    params: &ScaledParams,
    opts: KernelOptions,
) -> Result<Vec<Mode>> {
    let exp = PoleExpansion::g_kernel(1, sign, omega, roots, params);
    if exp.near_resonance {
        let w0 = params.omega0();
        return Err(EmissionError::Resonance {
            relative: if w0 > 0.0 {
                (omega - w0).abs() / w0
            } else {
                0.0
            },
        });
    }
    exp.modes(opts)
}
