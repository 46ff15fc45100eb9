use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed config at line {line}: {message}")]
    MalformedConfig { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("singular evaluation: field point is {distance:e} m from the source (minimum {r_min:e} m)")]
    SingularEvaluation { distance: f64, r_min: f64 },

    #[error("insufficient history: retarded time lies outside the sampled span [{start}, {end}] s")]
    InsufficientHistory { start: f64, end: f64 },

    #[error("near-luminal degeneracy: c|R| - R.v = {denominator:e} is below {threshold:e}")]
    NearLuminal { denominator: f64, threshold: f64 },

    #[error("unsupported orbit: inequality {inequality} violated ({detail})")]
    UnsupportedOrbit { inequality: &'static str, detail: String },

    #[error("unbound orbit: E = {energy:e} m^2/s^2 is not below c^2 = {c2:e} m^2/s^2")]
    UnboundOrbit { energy: f64, c2: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("step size underflow at t = {t} s (h = {h:e} s)")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
