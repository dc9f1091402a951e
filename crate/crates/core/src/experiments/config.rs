//! Scenario configuration: JSON with explicit units on every dimensional value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{EmissionError, Result};
use crate::noise::{NoiseCorrelator, TabulatedSpectrum};
use crate::params::{codata, PhysicalParams};
use crate::semiclassical::{EnsembleSpec, MotionMode, Window};
use crate::spectra::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Roots,
    Kernels,
    Spectrum,
    FiniteTime,
    OracleCheck,
    CompareOrders,
    ConvergenceScan,
    McEstimate,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Roots => "roots",
            ScenarioKind::Kernels => "kernels",
            ScenarioKind::Spectrum => "spectrum",
            ScenarioKind::FiniteTime => "finite-time",
            ScenarioKind::OracleCheck => "oracle-check",
            ScenarioKind::CompareOrders => "compare-orders",
            ScenarioKind::ConvergenceScan => "convergence-scan",
            ScenarioKind::McEstimate => "mc-estimate",
        }
    }
}

/// A number with its unit, e.g. `{"value": 9.1e-31, "unit": "kg"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    pub fn new(value: f64, unit: &str) -> Self {
        Quantity {
            value,
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dimension {
    Mass,
    Charge,
    Stiffness,
    Coupling,
    Action,
    Permittivity,
    Speed,
    Reaction,
    AngularFrequency,
    Time,
}

/// `(multiplier, divisor)` to SI; decimal prefixes divide so that e.g. 3 fs is exactly 3e-15.
fn unit_factor(dim: Dimension, unit: &str) -> Option<(f64, f64)> {
    let u: String = unit.chars().filter(|c| !c.is_whitespace()).collect();
    let f = match (dim, u.as_str()) {
        (Dimension::Mass, "kg") => (1.0, 1.0),
        (Dimension::Mass, "g") => (1.0, 1e3),
        (Dimension::Charge, "C") => (1.0, 1.0),
        (Dimension::Stiffness, "kg/s^2" | "N/m") => (1.0, 1.0),
        (Dimension::Coupling, "1/(m^2s)" | "m^-2s^-1") => (1.0, 1.0),
        (Dimension::Action, "Js" | "J*s") => (1.0, 1.0),
        (Dimension::Permittivity, "F/m" | "C^2/(Nm^2)") => (1.0, 1.0),
        (Dimension::Speed, "m/s") => (1.0, 1.0),
        (Dimension::Reaction, "kgs" | "kg*s") => (1.0, 1.0),
        (Dimension::AngularFrequency, "rad/s" | "1/s" | "s^-1") => (1.0, 1.0),
        (Dimension::AngularFrequency, "Hz") => (2.0 * std::f64::consts::PI, 1.0),
        (Dimension::AngularFrequency, "eV") => (codata::ELEMENTARY_CHARGE / codata::HBAR, 1.0),
        (Dimension::Time, "s") => (1.0, 1.0),
        (Dimension::Time, "ms") => (1.0, 1e3),
        (Dimension::Time, "us") => (1.0, 1e6),
        (Dimension::Time, "ns") => (1.0, 1e9),
        (Dimension::Time, "ps") => (1.0, 1e12),
        (Dimension::Time, "fs") => (1.0, 1e15),
        _ => return None,
    };
    Some(f)
}

fn convert(q: &Quantity, dim: Dimension, name: &str) -> Result<f64> {
    let factor = unit_factor(dim, &q.unit)
        .ok_or_else(|| EmissionError::Config(format!("{name}: unsupported unit '{}'", q.unit)))?;
    if !q.value.is_finite() {
        return Err(EmissionError::Config(format!(
            "{name}: value must be finite"
        )));
    }
    Ok(q.value * factor.0 / factor.1)
}

fn convert_opt(q: &Option<Quantity>, dim: Dimension, name: &str, default: f64) -> Result<f64> {
    q.as_ref().map_or(Ok(default), |q| convert(q, dim, name))
}

/// Particle and coupling constants. Missing `m`, `e`, `hbar`, `eps0`, `c`
/// default to CODATA electron values; `beta` defaults to `e^2/(6 pi eps0 c^3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Quantity>,
    /// Either `kappa` or `omega0` (or neither, for a free charge).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<Quantity>,
    pub lambda: Quantity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Quantity>,
}

impl ParamsConfig {
    pub fn resolve(&self) -> Result<PhysicalParams> {
        let m = convert_opt(&self.m, Dimension::Mass, "m", codata::ELECTRON_MASS)?;
        let e = convert_opt(&self.e, Dimension::Charge, "e", codata::ELEMENTARY_CHARGE)?;
        let hbar = convert_opt(&self.hbar, Dimension::Action, "hbar", codata::HBAR)?;
        let eps0 = convert_opt(
            &self.eps0,
            Dimension::Permittivity,
            "eps0",
            codata::EPSILON_0,
        )?;
        let c = convert_opt(&self.c, Dimension::Speed, "c", codata::SPEED_OF_LIGHT)?;
        let lambda = convert(&self.lambda, Dimension::Coupling, "lambda")?;
        let mut p = PhysicalParams::with_constants(m, e, 0.0, lambda, hbar, eps0, c)?;
        p = match (&self.kappa, &self.omega0) {
            (Some(_), Some(_)) => {
                return Err(EmissionError::Config(
                    "give kappa or omega0, not both".into(),
                ))
            }
            (Some(k), None) => {
                p.kappa = convert(k, Dimension::Stiffness, "kappa")?;
                p
            }
            (None, Some(w)) => p.with_omega0(convert(w, Dimension::AngularFrequency, "omega0")?)?,
            (None, None) => p,
        };
        if let Some(b) = &self.beta {
            p = p.with_beta(convert(b, Dimension::Reaction, "beta")?)?;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseConfig {
    White,
    ExponentialOu {
        gamma: Quantity,
    },
    GaussianWindow {
        tau: Quantity,
    },
    /// Two-column CSV (`omega,value`) with a header; `unit` applies to the
    /// frequency column. Relative paths are taken from the config file.
    Tabulated {
        path: PathBuf,
        unit: String,
    },
}

impl NoiseConfig {
    pub fn resolve(&self, base: &Path) -> Result<NoiseCorrelator> {
        match self {
            NoiseConfig::White => Ok(NoiseCorrelator::White),
            NoiseConfig::ExponentialOu { gamma } => {
                NoiseCorrelator::exponential(convert(gamma, Dimension::AngularFrequency, "gamma")?)
            }
            NoiseConfig::GaussianWindow { tau } => {
                NoiseCorrelator::gaussian(convert(tau, Dimension::Time, "tau")?)
            }
            NoiseConfig::Tabulated { path, unit } => {
                let factor = unit_factor(Dimension::AngularFrequency, unit).ok_or_else(|| {
                    EmissionError::Config(format!("tabulated: unsupported unit '{unit}'"))
                })?;
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    base.join(path)
                };
                let t = TabulatedSpectrum::from_csv_path(&full)?;
                let (omega, value): (Vec<f64>, Vec<f64>) = t
                    .samples()
                    .map(|(w, v)| (w * factor.0 / factor.1, v))
                    .unzip();
                Ok(NoiseCorrelator::Tabulated(TabulatedSpectrum::new(
                    omega, value,
                )?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Either explicit values or an evenly spaced range, with a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Values {
        values: Vec<f64>,
        unit: String,
    },
    Range {
        start: f64,
        stop: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
        unit: String,
    },
}

impl GridConfig {
    fn resolve(&self, dim: Dimension, name: &str) -> Result<Vec<f64>> {
        let (raw, unit) = match self {
            GridConfig::Values { values, unit } => (values.clone(), unit),
            GridConfig::Range {
                start,
                stop,
                points,
                spacing,
                unit,
            } => {
                if *points == 0 {
                    return Err(EmissionError::Config(format!(
                        "{name}: points must be >= 1"
                    )));
                }
                let n = *points;
                let at = |i: usize| {
                    if n == 1 {
                        0.0
                    } else {
                        i as f64 / (n - 1) as f64
                    }
                };
                let v = match spacing {
                    Spacing::Linear => (0..n).map(|i| start + (stop - start) * at(i)).collect(),
                    Spacing::Log => {
                        if !(*start > 0.0 && *stop > 0.0) {
                            return Err(EmissionError::Config(format!(
                                "{name}: log spacing needs positive bounds"
                            )));
                        }
                        (0..n).map(|i| start * (stop / start).powf(at(i))).collect()
                    }
                };
                (v, unit)
            }
        };
        raw.iter()
            .map(|&v| convert(&Quantity::new(v, unit), dim, name))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggles {
    /// Finite-time rate: remove terms carrying a nonzero frequency.
    #[serde(default)]
    pub drop_oscillatory: bool,
    /// Finite-time rate: remove the runaway modes.
    #[serde(default = "yes")]
    pub drop_runaway: bool,
    /// Kernel evaluation: keep the runaway pole.
    #[serde(default)]
    pub include_runaway: bool,
}

fn yes() -> bool {
    true
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            drop_oscillatory: false,
            drop_runaway: true,
            include_runaway: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative agreement of residue kernels with contour inversion.
    #[serde(default = "kernel_tolerance")]
    pub kernel: f64,
    /// Relative agreement of the finite-time rate with direct quadrature.
    #[serde(default = "rate_tolerance")]
    pub rate: f64,
}

fn kernel_tolerance() -> f64 {
    1e-9
}

fn rate_tolerance() -> f64 {
    1e-4
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel: kernel_tolerance(),
            rate: rate_tolerance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub dt: Quantity,
    pub t_total: Quantity,
    pub n_traj: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "rectangular")]
    pub window: Window,
    #[serde(default = "one")]
    pub n_segments: usize,
    #[serde(default = "one")]
    pub bins_per_band: usize,
    /// Defaults to harmonic for a bound charge, free otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<MotionMode>,
}

fn rectangular() -> Window {
    Window::Rectangular
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// File stem; defaults to `<id>_<scenario>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

fn default_grid_n() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    /// May be omitted when the scenario is chosen on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioKind>,
    pub params: ParamsConfig,
    #[serde(default = "white")]
    pub noise: NoiseConfig,
    pub omega_grid: GridConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub toggles: Toggles,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Panels of the coarsest quadrature grid in oracle checks.
    #[serde(default = "default_grid_n")]
    pub quadrature_grid_n: usize,
    /// Closed forms evaluated by the spectrum scenario; all applicable ones if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formulas: Option<Vec<Formula>>,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Directory against which relative paths are resolved.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn white() -> NoiseConfig {
    NoiseConfig::White
}

/// Fully resolved scenario in SI units; embedded in every JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub kind: ScenarioKind,
    pub params: PhysicalParams,
    pub noise: NoiseCorrelator,
    pub omega_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub ensemble: Option<EnsembleSpec>,
    pub mode: Option<MotionMode>,
    pub toggles: Toggles,
    pub tolerances: Tolerances,
    pub quadrature_grid_n: usize,
    pub formulas: Option<Vec<Formula>>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut c: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| EmissionError::Config(e.to_string()))?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base)
    }

    /// Built-in configuration used when no file is given.
    pub fn builtin(kind: ScenarioKind) -> Self {
        let electron_bound = ParamsConfig {
            m: None,
            e: None,
            kappa: None,
            omega0: Some(Quantity::new(3.29e15, "rad/s")),
            lambda: Quantity::new(1e-2, "1/(m^2 s)"),
            beta: None,
            hbar: None,
            eps0: None,
            c: None,
        };
        let log_grid = GridConfig::Range {
            start: 1e14,
            stop: 1e18,
            points: 9,
            spacing: Spacing::Log,
            unit: "rad/s".into(),
        };
        let mut c = ScenarioConfig {
            id: "default".into(),
            scenario: Some(kind),
            params: electron_bound.clone(),
            noise: NoiseConfig::White,
            omega_grid: log_grid,
            t_grid: Some(GridConfig::Range {
                start: 0.0,
                stop: 5e-7,
                points: 11,
                spacing: Spacing::Linear,
                unit: "s".into(),
            }),
            ensemble: None,
            toggles: Toggles::default(),
            tolerances: Tolerances::default(),
            quadrature_grid_n: default_grid_n(),
            formulas: None,
            outputs: OutputConfig::default(),
            base_dir: PathBuf::new(),
        };
        match kind {
            ScenarioKind::OracleCheck => {
                // order-one numbers so the brute-force checks stay cheap
                c.params = ParamsConfig {
                    m: Some(Quantity::new(1.0, "kg")),
                    e: Some(Quantity::new(1.0, "C")),
                    omega0: Some(Quantity::new(0.2, "rad/s")),
                    beta: Some(Quantity::new(1.0, "kg s")),
                    lambda: Quantity::new(1.0, "1/(m^2 s)"),
                    ..electron_bound
                };
                c.noise = NoiseConfig::ExponentialOu {
                    gamma: Quantity::new(1.0, "1/s"),
                };
                c.omega_grid = GridConfig::Values {
                    values: vec![0.5, 1.5],
                    unit: "rad/s".into(),
                };
                c.t_grid = Some(GridConfig::Values {
                    values: vec![1.0, 4.0],
                    unit: "s".into(),
                });
            }
            ScenarioKind::ConvergenceScan => {
                c.noise = NoiseConfig::ExponentialOu {
                    gamma: Quantity::new(1e16, "1/s"),
                };
                c.omega_grid = GridConfig::Values {
                    values: vec![1e16],
                    unit: "rad/s".into(),
                };
                c.t_grid = Some(GridConfig::Range {
                    start: 0.0,
                    stop: 3e-7,
                    points: 401,
                    spacing: Spacing::Linear,
                    unit: "s".into(),
                });
            }
            ScenarioKind::McEstimate => {
                c.params.omega0 = None;
                c.noise = NoiseConfig::ExponentialOu {
                    gamma: Quantity::new(1.0, "1/s"),
                };
                c.ensemble = Some(EnsembleConfig {
                    dt: Quantity::new(0.01, "s"),
                    t_total: Quantity::new(655.36, "s"),
                    n_traj: 16,
                    master_seed: 0,
                    window: Window::Rectangular,
                    n_segments: 1,
                    bins_per_band: 64,
                    mode: None,
                });
            }
            _ => {}
        }
        c
    }

    pub fn resolve(&self, kind: Option<ScenarioKind>) -> Result<Scenario> {
        let kind = kind
            .or(self.scenario)
            .ok_or_else(|| EmissionError::Config("no scenario selected".into()))?;
        let params = self.params.resolve()?;
        let noise = self.noise.resolve(&self.base_dir)?;
        let omega_grid = self
            .omega_grid
            .resolve(Dimension::AngularFrequency, "omega_grid")?;
        let t_grid = match &self.t_grid {
            Some(g) => g.resolve(Dimension::Time, "t_grid")?,
            None => Vec::new(),
        };
        let (ensemble, mode) = match &self.ensemble {
            Some(e) => {
                let mode = e.mode.unwrap_or(if params.kappa > 0.0 {
                    MotionMode::Harmonic
                } else {
                    MotionMode::Free
                });
                let spec = EnsembleSpec {
                    dt: convert(&e.dt, Dimension::Time, "dt")?,
                    t_total: convert(&e.t_total, Dimension::Time, "t_total")?,
                    n_traj: e.n_traj,
                    master_seed: e.master_seed,
                    integrator: mode.integrator(),
                    window: e.window,
                    n_segments: e.n_segments,
                    bins_per_band: e.bins_per_band,
                };
                spec.validate()?;
                (Some(spec), Some(mode))
            }
            None => (None, None),
        };
        let needs_t = matches!(
            kind,
            ScenarioKind::Kernels
                | ScenarioKind::FiniteTime
                | ScenarioKind::OracleCheck
                | ScenarioKind::ConvergenceScan
        );
        if needs_t && t_grid.is_empty() {
            return Err(EmissionError::Config(format!(
                "{} needs t_grid",
                kind.name()
            )));
        }
        if t_grid.iter().any(|t| *t < 0.0) {
            return Err(EmissionError::Config("t_grid: times must be >= 0".into()));
        }
        if kind == ScenarioKind::McEstimate && ensemble.is_none() {
            return Err(EmissionError::Config(
                "mc-estimate needs an ensemble block".into(),
            ));
        }
        if kind == ScenarioKind::ConvergenceScan && params.kappa <= 0.0 {
            return Err(EmissionError::Config(
                "convergence-scan needs kappa > 0".into(),
            ));
        }
        if self.quadrature_grid_n < 64 {
            return Err(EmissionError::Config(
                "quadrature_grid_n must be >= 64".into(),
            ));
        }
        Ok(Scenario {
            id: self.id.clone(),
            kind,
            params,
            noise,
            omega_grid,
            t_grid,
            ensemble,
            mode,
            toggles: self.toggles,
            tolerances: self.tolerances,
            quadrature_grid_n: self.quadrature_grid_n,
            formulas: self.formulas.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn units_are_converted() {
        let json = r#"{
            "id": "t",
            "scenario": "spectrum",
            "params": {
                "m": {"value": 1.0, "unit": "g"},
                "omega0": {"value": 1.0, "unit": "Hz"},
                "lambda": {"value": 2.0, "unit": "1/(m^2 s)"}
            },
            "noise": {"kind": "gaussian_window", "tau": {"value": 3.0, "unit": "fs"}},
            "omega_grid": {"start": 1.0, "stop": 100.0, "points": 3, "spacing": "log", "unit": "rad/s"},
            "t_grid": {"values": [1.0, 2.0], "unit": "ns"}
        }"#;
        let c = ScenarioConfig::from_json(json, Path::new(".")).unwrap();
        let s = c.resolve(None).unwrap();
        assert_eq!(s.params.m, 1e-3);
        assert!((s.params.omega0() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(s.noise, NoiseCorrelator::gaussian(3e-15).unwrap());
        assert!((s.omega_grid[1] - 10.0).abs() < 1e-12);
        assert_eq!(s.t_grid, vec![1e-9, 2e-9]);
        assert_eq!(s.toggles, Toggles::default());
    }

    #[test]
    fn bad_units_and_fields_are_config_errors() {
        let json = r#"{"id": "t", "params": {"lambda": {"value": 1.0, "unit": "furlong"}},
            "omega_grid": {"values": [1.0], "unit": "rad/s"}}"#;
        let c = ScenarioConfig::from_json(json, Path::new(".")).unwrap();
        assert!(matches!(
            c.resolve(Some(ScenarioKind::Spectrum)),
            Err(EmissionError::Config(_))
        ));
        let json = r#"{"id": "t", "bogus": 1, "params": {"lambda": {"value": 1.0, "unit": "1/(m^2 s)"}},
            "omega_grid": {"values": [1.0], "unit": "rad/s"}}"#;
        assert!(matches!(
            ScenarioConfig::from_json(json, Path::new(".")),
            Err(EmissionError::Config(_))
        ));
    }

    #[test]
    fn builtins_resolve_and_round_trip() {
        for kind in [
            ScenarioKind::Roots,
            ScenarioKind::Kernels,
            ScenarioKind::Spectrum,
            ScenarioKind::FiniteTime,
            ScenarioKind::OracleCheck,
            ScenarioKind::CompareOrders,
            ScenarioKind::ConvergenceScan,
            ScenarioKind::McEstimate,
        ] {
            let c = ScenarioConfig::builtin(kind);
            let s = c.resolve(None).unwrap();
            let text = serde_json::to_string(&c).unwrap();
            let back = ScenarioConfig::from_json(&text, Path::new("")).unwrap();
            assert_eq!(back, c);
            let json = serde_json::to_string(&s).unwrap();
            let s2: Scenario = serde_json::from_str(&json).unwrap();
            assert_eq!(s2, s);
        }
    }
}
