//! Physical constants, particle parameters and the internal unit system.
//!
//! Every kernel and spectrum routine works in scaled units where the
//! renormalized mass is 1 and the radiation-reaction constant is 1, so that
//! the runaway root sits at `z = 1` and the physical frequencies are the
//! dimensionless groups `beta * omega / m`. SI values only appear at the I/O
//! boundary and in the overall rate prefactor.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{EmissionError, Result};

/// CODATA 2018 exact/recommended values.
pub mod codata {
    /// Elementary charge [C].
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Reduced Planck constant [J s].
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Vacuum permittivity [C^2 / (N m^2)].
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    /// Speed of light [m/s].
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
    /// Electron mass [kg].
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
}

/// Abraham-Lorentz coefficient `e^2 / (6 pi eps0 c^3)` in kg s.
pub fn derive_beta(e: f64, eps0: f64, c: f64) -> Result<f64> {
    for (name, v) in [("e", e), ("eps0", eps0), ("c", c)] {
        if !v.is_finite() {
            return Err(EmissionError::invalid(
                name,
                format!("non-finite value {v}"),
            ));
        }
    }
    if e == 0.0 {
        return Err(EmissionError::invalid("e", "charge must be nonzero"));
    }
    if eps0 <= 0.0 {
        return Err(EmissionError::invalid("eps0", "must be positive"));
    }
    if c <= 0.0 {
        return Err(EmissionError::invalid("c", "must be positive"));
    }
    Ok(e * e / (6.0 * PI * eps0 * c * c * c))
}

/// Particle and field constants, SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Renormalized mass [kg].
    pub m: f64,
    /// Charge [C].
    pub e: f64,
    /// Harmonic force constant [kg/s^2].
    pub kappa: f64,
    /// Noise coupling [1/(m^2 s)].
    pub lambda: f64,
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
    /// Radiation-reaction constant [kg s]. Normally derived from `(e, eps0, c)`;
    /// the weak-coupling experiments set it to zero while keeping `e`.
    pub beta: f64,
}

impl PhysicalParams {
    pub fn new(m: f64, e: f64, kappa: f64, lambda: f64) -> Result<Self> {
        Self::with_constants(
            m,
            e,
            kappa,
            lambda,
            codata::HBAR,
            codata::EPSILON_0,
            codata::SPEED_OF_LIGHT,
        )
    }

    pub fn with_constants(
        m: f64,
        e: f64,
        kappa: f64,
        lambda: f64,
        hbar: f64,
        eps0: f64,
        c: f64,
    ) -> Result<Self> {
        let beta = derive_beta(e, eps0, c)?;
        let p = PhysicalParams {
            m,
            e,
            kappa,
            lambda,
            hbar,
            eps0,
            c,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    /// Free electron with CODATA constants.
    pub fn electron(lambda: f64) -> Self {
        Self::new(
            codata::ELECTRON_MASS,
            codata::ELEMENTARY_CHARGE,
            0.0,
            lambda,
        )
        .expect("CODATA electron parameters are valid")
    }

    /// Electron bound with oscillator frequency `omega0` [1/s].
    pub fn electron_bound(lambda: f64, omega0: f64) -> Self {
        let free = Self::electron(lambda);
        free.with_omega0(omega0).expect("valid omega0")
    }

    /// Same particle with `kappa = m * omega0^2`.
    pub fn with_omega0(mut self, omega0: f64) -> Result<Self> {
        if !omega0.is_finite() || omega0 < 0.0 {
            return Err(EmissionError::invalid("omega0", "must be finite and >= 0"));
        }
        self.kappa = self.m * omega0 * omega0;
        Ok(self)
    }

    /// Same particle with the radiation-reaction constant replaced.
    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(EmissionError::invalid("beta", "must be finite and >= 0"));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        self.lambda = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("m", self.m),
            ("e", self.e),
            ("kappa", self.kappa),
            ("lambda", self.lambda),
            ("hbar", self.hbar),
            ("eps0", self.eps0),
            ("c", self.c),
            ("beta", self.beta),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(EmissionError::invalid(
                    name,
                    format!("non-finite value {v}"),
                ));
            }
        }
        if self.m <= 0.0 {
            return Err(EmissionError::invalid("m", "mass must be positive"));
        }
        if self.e == 0.0 {
            return Err(EmissionError::invalid("e", "charge must be nonzero"));
        }
        if self.lambda < 0.0 {
            return Err(EmissionError::invalid("lambda", "must be >= 0"));
        }
        if self.kappa < 0.0 {
            return Err(EmissionError::invalid("kappa", "must be >= 0"));
        }
        if self.hbar <= 0.0 || self.eps0 <= 0.0 || self.c <= 0.0 {
            return Err(EmissionError::invalid(
                "constants",
                "hbar, eps0, c must be positive",
            ));
        }
        if self.beta < 0.0 {
            return Err(EmissionError::invalid("beta", "must be >= 0"));
        }
        Ok(())
    }

    /// Oscillator frequency `sqrt(kappa / m)` [1/s].
    pub fn omega0(&self) -> f64 {
        (self.kappa / self.m).sqrt()
    }

    /// True when the stored beta equals `e^2 / (6 pi eps0 c^3)` to 1e-12.
    pub fn beta_is_derived(&self) -> bool {
        match derive_beta(self.e, self.eps0, self.c) {
            Ok(b) => ((b - self.beta) / b).abs() <= 1e-12,
            Err(_) => false,
        }
    }

    /// `lambda hbar e^2 / (2 pi^2 eps0 c^2)`, the common prefactor of every rate.
    pub fn rate_prefactor(&self) -> f64 {
        self.lambda * self.hbar * self.e * self.e / (2.0 * PI * PI * self.eps0 * self.c * self.c)
    }

    /// White-noise, first-order rate `lambda hbar e^2 / (pi^2 eps0 c^2 m^2 omega_k)`.
    pub fn white_rate(&self, omega_k: f64) -> f64 {
        2.0 * self.rate_prefactor() / (self.m * self.m * omega_k)
    }

    /// Drive amplitude `sqrt(lambda) hbar / m` of the semiclassical acceleration.
    pub fn drive_amplitude(&self) -> f64 {
        self.lambda.sqrt() * self.hbar / self.m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitMode {
    Si,
    Scaled,
}

/// Conversion between SI and the internal unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScale {
    /// One internal time unit, in seconds.
    pub time_unit: f64,
    /// One internal frequency unit, in 1/s.
    pub frequency_unit: f64,
    /// One internal mass unit, in kg.
    pub mass_unit: f64,
    pub mode: UnitMode,
}

impl UnitScale {
    pub fn identity() -> Self {
        UnitScale {
            time_unit: 1.0,
            frequency_unit: 1.0,
            mass_unit: 1.0,
            mode: UnitMode::Si,
        }
    }

    pub fn omega_to_scaled(&self, omega: f64) -> f64 {
        omega * self.time_unit
    }

    pub fn omega_to_si(&self, omega: f64) -> f64 {
        omega / self.time_unit
    }

    pub fn time_to_scaled(&self, t: f64) -> f64 {
        t / self.time_unit
    }

    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.time_unit
    }
}

/// Particle parameters in internal units. The constants that only enter the
/// SI rate prefactor (`e`, `hbar`, `eps0`, `c`, `lambda`) are carried unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub m: f64,
    pub beta: f64,
    pub kappa: f64,
    pub e: f64,
    pub lambda: f64,
    pub hbar: f64,
    pub eps0: f64,
    pub c: f64,
}

impl ScaledParams {
    pub fn omega0(&self) -> f64 {
        (self.kappa / self.m).sqrt()
    }

    /// Dimensionless parameters with `m = 1`, used directly by tests.
    pub fn unit(beta: f64, kappa: f64) -> Self {
        ScaledParams {
            m: 1.0,
            beta,
            kappa,
            e: codata::ELEMENTARY_CHARGE,
            lambda: 1.0,
            hbar: codata::HBAR,
            eps0: codata::EPSILON_0,
            c: codata::SPEED_OF_LIGHT,
        }
    }
}

/// Choose the internal unit system for `params`.
///
/// With `beta > 0` the time unit is `beta / m`. The weak-coupling limit
/// (`beta = 0`) falls back to `1 / omega0`, and to one second for a free
/// particle without radiation reaction.
pub fn to_scaled(params: &PhysicalParams) -> Result<(ScaledParams, UnitScale)> {
    params.validate()?;
    let time_unit = if params.beta > 0.0 {
        params.beta / params.m
    } else if params.kappa > 0.0 {
        1.0 / params.omega0()
    } else {
        1.0
    };
    let mass_unit = params.m;
    let scale = UnitScale {
        time_unit,
        frequency_unit: 1.0 / time_unit,
        mass_unit,
        mode: UnitMode::Scaled,
    };
    let scaled = ScaledParams {
        m: 1.0,
        beta: params.beta / (mass_unit * time_unit),
        kappa: params.kappa * time_unit * time_unit / mass_unit,
        e: params.e,
        lambda: params.lambda,
        hbar: params.hbar,
        eps0: params.eps0,
        c: params.c,
    };
    Ok((scaled, scale))
}

pub fn from_scaled(scaled: &ScaledParams, scale: &UnitScale) -> PhysicalParams {
    PhysicalParams {
        m: scaled.m * scale.mass_unit,
        e: scaled.e,
        kappa: scaled.kappa * scale.mass_unit / (scale.time_unit * scale.time_unit),
        lambda: scaled.lambda,
        hbar: scaled.hbar,
        eps0: scaled.eps0,
        c: scaled.c,
        beta: scaled.beta * scale.mass_unit * scale.time_unit,
    }
}
