use thiserror::Error;

/// Errors raised by the model, controller and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `beta` is outside the admissible set `cos(beta) > 2/3`.
    #[error("state outside the admissible domain: cos(beta) = {cos_beta:.6} <= 2/3 (beta = {beta})")]
    Domain { beta: f64, cos_beta: f64 },

    /// A cascade error reached its funnel boundary.
    #[error("funnel violation at level {level}: phi*|e| = {scaled_error:.12} (phi = {phi}, e = {error})")]
    FunnelViolation {
        level: usize,
        phi: f64,
        error: f64,
        scaled_error: f64,
    },

    /// The linearized internal dynamics have no hyperbolic split.
    #[error("internal dynamics are not hyperbolic (spring constant c = {c} must be positive)")]
    NotHyperbolic { c: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An integrator step was refused down to `min_step`.
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: IntegrationFailure },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Cause of an aborted integration. Carries the state at the last accepted step.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegrationFailure {
    /// The funnel guard could not be resolved above `min_step`.
    Funnel { source: Box<Error>, state: Vec<f64> },
    /// The plant left `cos(beta) > 2/3`.
    DomainExit { source: Box<Error>, state: Vec<f64> },
    /// Step size collapsed below `min_step` from error control alone.
    StepUnderflow { step: f64, state: Vec<f64> },
    /// Non-finite values appeared in the right-hand side.
    NonFinite { state: Vec<f64> },
    /// `max_steps` exceeded.
    TooManySteps { steps: usize },
}

impl std::fmt::Display for IntegrationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Funnel { source, state } => write!(f, "{source}; state = {state:?}"),
            Self::DomainExit { source, state } => write!(f, "{source}; state = {state:?}"),
            Self::StepUnderflow { step, state } => {
                write!(f, "step size {step:e} below minimum; state = {state:?}")
            }
            Self::NonFinite { state } => write!(f, "non-finite derivative; state = {state:?}"),
            Self::TooManySteps { steps } => write!(f, "exceeded {steps} steps"),
        }
    }
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::FunnelViolation { .. } => 2,
            Error::Domain { .. } => 3,
            Error::Integration { reason, .. } => match reason {
                IntegrationFailure::Funnel { .. } => 2,
                IntegrationFailure::DomainExit { .. } => 3,
                _ => 4,
            },
            Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) => 1,
            Error::NotHyperbolic { .. } => 1,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
