use thiserror::Error;

/// Errors raised by the analysis, certification and simulation engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density {0} is outside the model range v >= 0")]
    OutsideModelRange(f64),

    #[error("speed c = {c} is below the minimal speed 2*sqrt(a) = {c_min}")]
    SpeedBelowMinimal { c: f64, c_min: f64 },

    #[error("eta is undefined: discriminant {discriminant} < 0")]
    EtaUndefined { discriminant: f64 },

    #[error("operation requires the power motility family")]
    NotPowerFamily,

    #[error("parameters outside the admissible wave-speed window: {0}")]
    WindowViolation(String),

    #[error("certificate failed at check `{check}` (margin {margin:e} at x = {location})")]
    CertificateFailed {
        check: String,
        margin: f64,
        location: f64,
    },

    #[error("tail description missing or not integrable: {0}")]
    NonFiniteTail(String),

    #[error("auxiliary solution left [0, 2*eta] at t = {t} (value {value:e})")]
    BlowUp { t: f64, value: f64 },

    #[error("auxiliary solution increased in time by {excess:e} at t = {t}")]
    NonMonotone { t: f64, excess: f64 },

    #[error("no convergence in {stage}: increment {increment:e} after t = {t}")]
    NoConvergence {
        stage: &'static str,
        t: f64,
        increment: f64,
    },

    #[error("Picard iteration stalled after {iterations} iterates (last change {change:e})")]
    PicardStalled { iterations: usize, change: f64 },

    #[error("negative density {value:e} at node {node}")]
    NegativeDensity { node: usize, value: f64 },

    #[error("time step {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("simulation failed at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },

    #[error("profile never crosses level {0}")]
    NoCrossing(f64),

    #[error("need at least {needed} samples in the fit window, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("tail window too small ({0} points)")]
    WindowTooSmall(usize),

    #[error("radial profile never crosses level {0}")]
    NoRing(f64),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
