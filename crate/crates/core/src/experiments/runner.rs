//! Executes a resolved scenario, writes its data and metadata, and maps
//! failures to process exit codes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::analysis::{compare_orders, convergence_scan, decay_timescale};
use super::config::{Scenario, ScenarioConfig, ScenarioKind};
use crate::error::{EmissionError, Result};
use crate::kernels::{eval_f, eval_g, eval_gpm, KernelOptions, Sign};
use crate::noise::NoiseCorrelator;
use crate::oracle::{bromwich_numeric, rate_quadrature_scaled, KernelArgs, KernelId};
use crate::params::{to_scaled, PhysicalParams, ScaledParams, UnitMode, UnitScale};
use crate::roots::{approx_roots, solve_roots};
use crate::semiclassical::{
    estimate_rate_mc, rate_semiclassical_free, rate_semiclassical_harmonic, MotionMode,
};
use crate::spectra::{
    finite_time_shape, rate_finite_time, rate_free_exact, rate_free_limit_of_harmonic,
    rate_harmonic_asymptotic, rate_perturbative_free, rate_perturbative_harmonic,
    rate_white_baseline, FiniteTimeOptions, Formula, RateSeries, RATE_CSV_HEADER,
};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EMISSION_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_CONFIG: i32 = 1;
pub const EXIT_TOLERANCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Exit status for a failed run.
pub fn exit_code(err: &EmissionError) -> i32 {
    match err {
        EmissionError::Io(_) => EXIT_IO,
        EmissionError::ToleranceNotMet { .. }
        | EmissionError::Overflow { .. }
        | EmissionError::Statistical(_)
        | EmissionError::Integrator(_) => EXIT_TOLERANCE,
        _ => EXIT_INVALID_CONFIG,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub format: OutputFormat,
    /// Scaled mode reports frequencies and times in the natural unit system
    /// and rates as dimensionless shapes `rate / ((1/2) Gamma_white)`.
    pub units: UnitMode,
}

impl RunOptions {
    /// Output directory: explicit choice, then the config, then the
    /// environment, then `./out`.
    pub fn resolve_out_dir(explicit: Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
        explicit
            .or_else(|| config.outputs.dir.clone())
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Tabular result of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(header: &str) -> Self {
        Table {
            header: header.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    fn cell(v: &Value) -> String {
        match v {
            Value::Number(n) => n
                .as_f64()
                .map_or_else(|| n.to_string(), |x| format!("{x:e}")),
            Value::String(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
            Value::Null => String::new(),
            other => other.to_string(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.header)?;
        for row in &self.rows {
            wtr.write_record(row.iter().map(Self::cell))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// JSON number, or a string for non-finite values.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub table: Table,
    /// Scenario-specific results beyond the table (fits, closed forms).
    pub extra: Value,
    pub summary: String,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

struct Units {
    mode: UnitMode,
    scale: UnitScale,
    params: PhysicalParams,
}

impl Units {
    fn new(mode: UnitMode, params: &PhysicalParams) -> Result<Self> {
        Ok(Units {
            mode,
            scale: to_scaled(params)?.1,
            params: *params,
        })
    }

    fn omega(&self, w: f64) -> f64 {
        match self.mode {
            UnitMode::Si => w,
            UnitMode::Scaled => self.scale.omega_to_scaled(w),
        }
    }

    fn time(&self, t: f64) -> f64 {
        match self.mode {
            UnitMode::Si => t,
            UnitMode::Scaled => self.scale.time_to_scaled(t),
        }
    }

    fn rate(&self, w: f64, r: f64) -> f64 {
        match self.mode {
            UnitMode::Si => r,
            UnitMode::Scaled => r / (0.5 * self.params.white_rate(w)),
        }
    }
}

fn series_rows(table: &mut Table, s: &RateSeries, u: &Units) {
    for i in 0..s.rate.len() {
        let t = match &s.t {
            Some(ts) if ts.len() == 1 => num(u.time(ts[0])),
            Some(ts) => num(u.time(ts[i])),
            None => Value::Null,
        };
        table.rows.push(vec![
            num(u.omega(s.omega_k[i])),
            num(u.rate(s.omega_k[i], s.rate[i])),
            json!(s.formula.tag()),
            t,
        ]);
    }
}

fn finite_options(s: &Scenario) -> FiniteTimeOptions {
    FiniteTimeOptions {
        drop_oscillatory: s.toggles.drop_oscillatory,
        drop_runaway: s.toggles.drop_runaway,
    }
}

fn run_roots(s: &Scenario, u: &Units) -> Result<Outcome> {
    let (sp, scale) = to_scaled(&s.params)?;
    let exact = solve_roots(&sp)?;
    let approx = approx_roots(&sp)?;
    let conv = |z: Complex64| match u.mode {
        UnitMode::Si => z / scale.time_unit,
        UnitMode::Scaled => z,
    };
    let mut table = Table::new("root,re,im,approx_re,approx_im");
    let pairs = [
        ("z1", exact.z1, approx.z1),
        ("z2", Some(exact.z2), Some(approx.z2)),
        ("z3", Some(exact.z3), Some(approx.z3)),
    ];
    for (name, e, a) in pairs {
        if let (Some(e), Some(a)) = (e, a) {
            let (e, a) = (conv(e), conv(a));
            table.rows.push(vec![
                json!(name),
                num(e.re),
                num(e.im),
                num(a.re),
                num(a.im),
            ]);
        }
    }
    let decay = decay_timescale(&s.params)?;
    let mut summary = String::new();
    for row in &table.rows {
        let _ = writeln!(
            summary,
            "{}  {} {:+}i",
            row[0].as_str().unwrap_or(""),
            Table::cell(&row[1]),
            row[2].as_f64().unwrap_or(f64::NAN)
        );
    }
    if decay.infinite {
        summary.push_str("bound pair does not decay (free charge or beta = 0)\n");
    } else {
        let _ = writeln!(
            summary,
            "decay rate omega0^2 beta/(2m) = {:.6e} 1/s, exact -Re z2 = {:.6e} 1/s, time {:.6e} s",
            decay.analytic_rate, decay.exact_rate, decay.time
        );
    }
    Ok(Outcome {
        table,
        extra: json!({ "decay": decay, "confluent": exact.confluent }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

/// Factor converting a scaled kernel value to SI: the transform carries
/// `field_poles + origin_poles + 2 - numerator_power` powers of the time unit
/// and one inverse mass, and the inversion removes one time unit.
fn kernel_si_factor(denominator_z_powers: i32, numerator: i32, scale: &UnitScale, m: f64) -> f64 {
    scale.time_unit.powi(denominator_z_powers + 1 - numerator) / m
}

fn kernel_list(w: f64, wp: f64) -> Vec<(&'static str, KernelId, i32, i32, KernelArgs)> {
    let args = KernelArgs {
        omega: w,
        omega_prime: wp,
    };
    vec![
        ("f0", KernelId::F(0), 0, 0, args),
        ("f1", KernelId::F(1), 1, 0, args),
        ("f2", KernelId::F(2), 2, 0, args),
        (
            "g0_plus",
            KernelId::G {
                n: 0,
                sign: Sign::Plus,
            },
            1,
            0,
            args,
        ),
        (
            "g0_minus",
            KernelId::G {
                n: 0,
                sign: Sign::Minus,
            },
            1,
            0,
            args,
        ),
        (
            "g1_plus",
            KernelId::G {
                n: 1,
                sign: Sign::Plus,
            },
            1,
            1,
            args,
        ),
        (
            "g1_minus",
            KernelId::G {
                n: 1,
                sign: Sign::Minus,
            },
            1,
            1,
            args,
        ),
        (
            "gpm_plus_minus",
            KernelId::Gpm {
                signs: (Sign::Plus, Sign::Minus),
            },
            2,
            2,
            args,
        ),
        (
            "gpm_minus_plus",
            KernelId::Gpm {
                signs: (Sign::Minus, Sign::Plus),
            },
            2,
            2,
            args,
        ),
    ]
}

fn residue_kernel(
    id: KernelId,
    args: KernelArgs,
    t: f64,
    sp: &ScaledParams,
    opts: KernelOptions,
) -> Result<Complex64> {
    let roots = solve_roots(sp)?;
    match id {
        KernelId::F(n) => eval_f(n, t, &roots, sp, opts),
        KernelId::G { n, sign } => eval_g(n, sign, args.omega, t, &roots, sp, opts),
        KernelId::Gpm { signs } => {
            eval_gpm(signs, args.omega, args.omega_prime, t, &roots, sp, opts)
        }
    }
}

fn kernel_frequencies(s: &Scenario, scale: &UnitScale) -> (f64, f64) {
    let w = scale.omega_to_scaled(s.omega_grid[0]);
    let wp = s.omega_grid.get(1).map_or(w, |x| scale.omega_to_scaled(*x));
    (w, wp)
}

fn run_kernels(s: &Scenario, u: &Units) -> Result<Outcome> {
    let (sp, scale) = to_scaled(&s.params)?;
    let (w, wp) = kernel_frequencies(s, &scale);
    let opts = KernelOptions {
        include_runaway: s.toggles.include_runaway,
    };
    let mut table = Table::new("t,kernel,re,im");
    for &t in &s.t_grid {
        let ts = scale.time_to_scaled(t);
        for (name, id, den, numer, args) in kernel_list(w, wp) {
            let v = residue_kernel(id, args, ts, &sp, opts)?;
            let v = match u.mode {
                UnitMode::Si => v * kernel_si_factor(den, numer, &scale, s.params.m),
                UnitMode::Scaled => v,
            };
            table
                .rows
                .push(vec![num(u.time(t)), json!(name), num(v.re), num(v.im)]);
        }
    }
    let summary = format!(
        "{} kernels at {} times, omega = {:e}, omega' = {:e} (scaled), runaway {}\n",
        kernel_list(w, wp).len(),
        s.t_grid.len(),
        w,
        wp,
        if opts.include_runaway {
            "kept"
        } else {
            "dropped"
        }
    );
    Ok(Outcome {
        table,
        extra: json!({ "omega_scaled": w, "omega_prime_scaled": wp, "time_unit": scale.time_unit }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

fn spectrum_formulas(s: &Scenario) -> Vec<Formula> {
    if let Some(f) = &s.formulas {
        return f.clone();
    }
    let mut f = vec![
        Formula::WhiteBaseline,
        Formula::FreeExact,
        Formula::FreeLimitOfHarmonic,
        Formula::PerturbativeFree,
        Formula::SemiclassicalFree,
    ];
    if s.params.kappa > 0.0 {
        f.extend([
            Formula::HarmonicAsymptotic,
            Formula::PerturbativeHarmonic,
            Formula::SemiclassicalHarmonic,
        ]);
    }
    f
}

fn closed_form(
    f: Formula,
    grid: &[f64],
    corr: &NoiseCorrelator,
    p: &PhysicalParams,
) -> Result<RateSeries> {
    match f {
        Formula::WhiteBaseline => rate_white_baseline(grid, p),
        Formula::FreeExact => rate_free_exact(grid, corr, p),
        Formula::HarmonicAsymptotic => rate_harmonic_asymptotic(grid, corr, p),
        Formula::FreeLimitOfHarmonic => rate_free_limit_of_harmonic(grid, corr, p),
        Formula::PerturbativeHarmonic => rate_perturbative_harmonic(grid, corr, p),
        Formula::PerturbativeFree => rate_perturbative_free(grid, corr, p),
        Formula::SemiclassicalFree => rate_semiclassical_free(grid, corr, p),
        Formula::SemiclassicalHarmonic => rate_semiclassical_harmonic(grid, corr, p),
        Formula::FiniteTime | Formula::MonteCarlo => Err(EmissionError::Config(format!(
            "{} is not a closed form; use the finite-time or mc-estimate scenario",
            f.tag()
        ))),
    }
}

fn run_spectrum(s: &Scenario, u: &Units) -> Result<Outcome> {
    let mut table = Table::new(RATE_CSV_HEADER);
    let formulas = spectrum_formulas(s);
    for f in &formulas {
        series_rows(
            &mut table,
            &closed_form(*f, &s.omega_grid, &s.noise, &s.params)?,
            u,
        );
    }
    let summary = format!(
        "{} formulas x {} frequencies: {}\n",
        formulas.len(),
        s.omega_grid.len(),
        formulas
            .iter()
            .map(|f| f.tag())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(Outcome {
        table,
        extra: json!({ "formulas": formulas }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

fn run_finite_time(s: &Scenario, u: &Units) -> Result<Outcome> {
    let mut table = Table::new(RATE_CSV_HEADER);
    let opts = finite_options(s);
    for &w in &s.omega_grid {
        for &t in &s.t_grid {
            let r = rate_finite_time(w, t, &s.noise, &s.params, opts)?;
            table.rows.push(vec![
                num(u.omega(w)),
                num(u.rate(w, r)),
                json!(Formula::FiniteTime.tag()),
                num(u.time(t)),
            ]);
        }
    }
    let summary = format!(
        "finite-time rate at {} frequencies x {} times (oscillatory terms {}, runaway {})\n",
        s.omega_grid.len(),
        s.t_grid.len(),
        if opts.drop_oscillatory {
            "dropped"
        } else {
            "kept"
        },
        if opts.drop_runaway { "dropped" } else { "kept" }
    );
    Ok(Outcome {
        table,
        extra: json!({ "options": opts }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

fn relative(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn run_oracle_check(s: &Scenario, u: &Units) -> Result<Outcome> {
    let (sp, scale) = to_scaled(&s.params)?;
    let (w, wp) = kernel_frequencies(s, &scale);
    let roots = solve_roots(&sp)?;
    let rightmost = roots.all().iter().map(|z| z.re).fold(0.0f64, f64::max);
    let mut table = Table::new("check,omega_k,t,value,reference,rel_error,tolerance,pass");
    let mut worst_kernel = 0.0f64;
    let mut worst_rate = 0.0f64;
    let mut passed = true;
    for &t in &s.t_grid {
        let ts = scale.time_to_scaled(t);
        let abscissa = rightmost + (2.0 / ts.max(1.0)).min(0.5);
        for (name, id, _, _, args) in kernel_list(w, wp) {
            let reference = residue_kernel(id, args, ts, &sp, KernelOptions::with_runaway())?;
            let value = bromwich_numeric(id, args, ts, &sp, abscissa, 1 << 22)?.value;
            let rel = (value - reference).norm() / reference.norm().max(f64::MIN_POSITIVE);
            let ok = rel <= s.tolerances.kernel;
            passed &= ok;
            worst_kernel = worst_kernel.max(rel);
            table.rows.push(vec![
                json!(format!("kernel_{name}")),
                num(u.omega(s.omega_grid[0])),
                num(u.time(t)),
                num(value.norm()),
                num(reference.norm()),
                num(rel),
                num(s.tolerances.kernel),
                json!(ok),
            ]);
        }
    }
    let mut notes = Vec::new();
    if matches!(s.noise, NoiseCorrelator::White) {
        notes.push("rate quadrature skipped: white noise has no pointwise correlator".to_string());
    } else {
        let corr = s.noise.rescaled(scale.time_unit);
        for &omega in &s.omega_grid {
            for &t in s.t_grid.iter().filter(|t| **t > 0.0) {
                let (ws, ts) = (scale.omega_to_scaled(omega), scale.time_to_scaled(t));
                let reference =
                    finite_time_shape(ws, ts, &corr, &sp, FiniteTimeOptions::default())?;
                let (value, order) =
                    match rate_quadrature_scaled(ws, ts, &corr, &sp, s.quadrature_grid_n) {
                        Ok(q) => (q.shape, q.observed_order),
                        Err(EmissionError::ToleranceNotMet { estimate, .. }) => {
                            (estimate, f64::NAN)
                        }
                        Err(e) => return Err(e),
                    };
                let rel = relative(value, reference);
                let ok = rel <= s.tolerances.rate && order.is_finite();
                passed &= ok;
                worst_rate = worst_rate.max(rel);
                let prefactor = match u.mode {
                    UnitMode::Si => 0.5 * s.params.white_rate(omega),
                    UnitMode::Scaled => 1.0,
                };
                table.rows.push(vec![
                    json!("rate_quadrature"),
                    num(u.omega(omega)),
                    num(u.time(t)),
                    num(prefactor * value),
                    num(prefactor * reference),
                    num(rel),
                    num(s.tolerances.rate),
                    json!(ok),
                ]);
            }
        }
    }
    let mut summary = format!(
        "kernels vs contour inversion: worst relative error {worst_kernel:.3e} (tolerance {:.1e})\n",
        s.tolerances.kernel
    );
    if notes.is_empty() {
        let _ = writeln!(
            summary,
            "rate vs direct quadrature: worst relative error {worst_rate:.3e} (tolerance {:.1e})",
            s.tolerances.rate
        );
    }
    for n in &notes {
        let _ = writeln!(summary, "{n}");
    }
    let _ = writeln!(summary, "{}", if passed { "PASS" } else { "FAIL" });
    Ok(Outcome {
        table,
        extra: json!({ "worst_kernel_error": worst_kernel, "worst_rate_error": worst_rate, "notes": notes }),
        summary,
        passed,
        files: Vec::new(),
    })
}

fn run_compare_orders(s: &Scenario, u: &Units) -> Result<Outcome> {
    let mut table = Table::new(
        "omega_k,free_exact,free_limit_of_harmonic,perturbative_free,semiclassical_free,white_baseline,exact_over_limit,perturbative_over_limit,unphysical_term,unphysical_expected",
    );
    let mut summary =
        String::from("omega_k         exact/limit   perturbative/limit   semiclassical/limit\n");
    let mut records = Vec::new();
    for &w in &s.omega_grid {
        let r = compare_orders(w, &s.noise, &s.params)?;
        let exact_over = r.free_exact / r.free_limit_of_harmonic;
        let pert_over = r.perturbative_free / r.free_limit_of_harmonic;
        let semi_over = r.semiclassical_free / r.free_limit_of_harmonic;
        let rate = |x: f64| num(u.rate(w, x));
        table.rows.push(vec![
            num(u.omega(w)),
            rate(r.free_exact),
            rate(r.free_limit_of_harmonic),
            rate(r.perturbative_free),
            rate(r.semiclassical_free),
            rate(r.white_baseline),
            num(exact_over),
            num(pert_over),
            rate(r.unphysical_term),
            rate(r.unphysical_expected),
        ]);
        let _ = writeln!(
            summary,
            "{:<15.6e} {:<13.10} {:<20.10} {:.10}",
            u.omega(w),
            exact_over,
            pert_over,
            semi_over
        );
        records.push(r);
    }
    Ok(Outcome {
        table,
        extra: json!({ "records": records }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

fn run_convergence_scan(s: &Scenario, u: &Units) -> Result<Outcome> {
    let mut table = Table::new("omega_k,t,rate,asymptote,deviation");
    let decay = decay_timescale(&s.params)?;
    let mut summary = String::new();
    let mut fits = Vec::new();
    for &w in &s.omega_grid {
        let scan = convergence_scan(w, &s.noise, &s.params, &s.t_grid, finite_options(s))?;
        let t = scan.series.t.clone().unwrap_or_default();
        for (ti, r) in t.iter().zip(&scan.series.rate) {
            table.rows.push(vec![
                num(u.omega(w)),
                num(u.time(*ti)),
                num(u.rate(w, *r)),
                num(u.rate(w, scan.asymptote)),
                num(u.rate(w, r - scan.asymptote)),
            ]);
        }
        match (&scan.envelope, &scan.warning) {
            (Some(e), _) => {
                let _ = writeln!(
                    summary,
                    "omega_k = {:e}: fitted decay {:.4e} 1/s vs omega0^2 beta/(2m) = {:.4e} 1/s (ratio {:.4})",
                    u.omega(w),
                    e.decay_rate,
                    decay.analytic_rate,
                    e.decay_rate / decay.analytic_rate
                );
            }
            (None, Some(msg)) => {
                let _ = writeln!(
                    summary,
                    "omega_k = {:e}: envelope fit failed ({msg}); raw series written",
                    u.omega(w)
                );
            }
            (None, None) => {}
        }
        fits.push(json!({ "omega_k": w, "asymptote": scan.asymptote, "envelope": scan.envelope, "warning": scan.warning }));
    }
    Ok(Outcome {
        table,
        extra: json!({ "decay": decay, "fits": fits }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

/// Fraction of the Nyquist frequency below which sampling aliasing of the
/// noise stays under about one percent and bands are compared.
pub const ALIAS_FREE_FRACTION: f64 = 0.1;

fn run_mc_estimate(s: &Scenario, u: &Units) -> Result<Outcome> {
    let spec = s
        .ensemble
        .ok_or_else(|| EmissionError::Config("mc-estimate needs an ensemble block".into()))?;
    let mode = s.mode.unwrap_or(MotionMode::Free);
    let r = estimate_rate_mc(&spec, &s.noise, &s.params, mode)?;
    let closed = r.band_average(|g| match mode {
        MotionMode::Free => Ok(rate_semiclassical_free(g, &s.noise, &s.params)?.rate),
        MotionMode::Harmonic => match rate_semiclassical_harmonic(g, &s.noise, &s.params) {
            Ok(series) => Ok(series.rate),
            Err(EmissionError::Resonance { .. }) => Ok(vec![f64::NAN; g.len()]),
            Err(e) => Err(e),
        },
    })?;
    let mut table = Table::new("omega,rate,stderr,semiclassical");
    let mut within = 0usize;
    let mut compared = 0usize;
    let alias_free = ALIAS_FREE_FRACTION * std::f64::consts::PI / spec.dt;
    for (i, &expected) in closed.iter().enumerate() {
        let w = r.omega[i];
        table.rows.push(vec![
            num(u.omega(w)),
            num(u.rate(w, r.rate[i])),
            num(u.rate(w, r.stderr[i])),
            num(u.rate(w, expected)),
        ]);
        if expected.is_finite() && w <= alias_free {
            compared += 1;
            if (r.rate[i] - expected).abs() <= 3.0 * r.stderr[i] {
                within += 1;
            }
        }
    }
    let summary = format!(
        "{} bands of width {:.4e} rad/s from {} trajectories (seed {}); {within}/{compared} bands below {:.4e} rad/s within 3 sigma of the semiclassical closed form\n",
        r.omega.len(),
        r.bandwidth,
        r.n_traj,
        spec.master_seed,
        u.omega(alias_free)
    );
    Ok(Outcome {
        table,
        extra: json!({
            "mode": mode,
            "bandwidth": r.bandwidth,
            "resolution": r.resolution,
            "alias_free_limit": u.omega(alias_free),
            "within_3_sigma": within,
            "compared": compared,
        }),
        summary,
        passed: true,
        files: Vec::new(),
    })
}

/// Runs the scenario and returns the in-memory outcome without writing files.
pub fn execute(s: &Scenario, units: UnitMode) -> Result<Outcome> {
    let u = Units::new(units, &s.params)?;
    match s.kind {
        ScenarioKind::Roots => run_roots(s, &u),
        ScenarioKind::Kernels => run_kernels(s, &u),
        ScenarioKind::Spectrum => run_spectrum(s, &u),
        ScenarioKind::FiniteTime => run_finite_time(s, &u),
        ScenarioKind::OracleCheck => run_oracle_check(s, &u),
        ScenarioKind::CompareOrders => run_compare_orders(s, &u),
        ScenarioKind::ConvergenceScan => run_convergence_scan(s, &u),
        ScenarioKind::McEstimate => run_mc_estimate(s, &u),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| EmissionError::Io(format!("{}: {e}", path.display())))
}

/// Resolve, execute and write outputs. Returns the outcome; a failed
/// tolerance check is reported through `Outcome::passed`.
pub fn run_scenario(
    config: &ScenarioConfig,
    kind: Option<ScenarioKind>,
    opts: &RunOptions,
) -> Result<Outcome> {
    let scenario = config.resolve(kind)?;
    let mut outcome = execute(&scenario, opts.units)?;
    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| EmissionError::Io(format!("{}: {e}", opts.out_dir.display())))?;
    let stem = config
        .outputs
        .stem
        .clone()
        .unwrap_or_else(|| format!("{}_{}", scenario.id, scenario.kind.name()));
    let meta = json!({
        "scenario": scenario,
        "config": config,
        "units": opts.units,
        "format": opts.format,
        "version": env!("CARGO_PKG_VERSION"),
        "extra": outcome.extra,
        "passed": outcome.passed,
    });
    match opts.format {
        OutputFormat::Csv => {
            let data = opts.out_dir.join(format!("{stem}.csv"));
            let mut buf = Vec::new();
            outcome.table.write_csv(&mut buf)?;
            write_file(&data, &buf)?;
            let side = opts.out_dir.join(format!("{stem}.meta.json"));
            write_file(&side, serde_json::to_string_pretty(&meta)?.as_bytes())?;
            outcome.files = vec![data, side];
        }
        OutputFormat::Json => {
            let data = opts.out_dir.join(format!("{stem}.json"));
            let mut doc = meta;
            doc["header"] = json!(outcome.table.header);
            doc["rows"] = json!(outcome.table.rows);
            write_file(&data, serde_json::to_string_pretty(&doc)?.as_bytes())?;
            outcome.files = vec![data];
        }
    }
    Ok(outcome)
}
