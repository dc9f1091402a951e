use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmissionError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("white noise has no pointwise correlation value")]
    UnsupportedPointwise,

    #[error("frequency {omega:e} outside tabulated range [{lo:e}, {hi:e}]")]
    OutOfRange { omega: f64, lo: f64, hi: f64 },

    #[error("exponential overflow: growth exponent {exponent:e} exceeds guard {guard:e}")]
    Overflow { exponent: f64, guard: f64 },

    #[error("divergent rate at omega_k = {omega:e}: {reason}")]
    Divergence { omega: f64, reason: &'static str },

    #[error("resonance singularity: |omega_k - omega0| / omega0 = {relative:e}")]
    Resonance { relative: f64 },

    #[error(
        "invalid contour: abscissa {abscissa:e} not right of singularity at Re z = {rightmost:e}"
    )]
    InvalidContour { abscissa: f64, rightmost: f64 },

    #[error("tolerance not met: target {target:e}, achieved {achieved:e} (estimate {estimate:e})")]
    ToleranceNotMet {
        target: f64,
        achieved: f64,
        estimate: f64,
    },

    #[error("statistical validity: {0}")]
    Statistical(String),

    #[error("integrator instability: {0}")]
    Integrator(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("I/O: {0}")]
    Io(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, EmissionError>;

impl EmissionError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        EmissionError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for EmissionError {
    fn from(e: std::io::Error) -> Self {
        EmissionError::Io(e.to_string())
    }
}

impl From<csv::Error> for EmissionError {
    fn from(e: csv::Error) -> Self {
        EmissionError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for EmissionError {
    fn from(e: serde_json::Error) -> Self {
        EmissionError::Config(e.to_string())
    }
}
