use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exponent {exponent:.3} exceeds the overflow guard {guard}")]
    OverflowGuard { exponent: f64, guard: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimated error {error:e})")]
    QuadratureNonConvergence { tol: f64, error: f64 },

    #[error("step size underflow at log-radius {log_radius}")]
    StepSizeUnderflow { log_radius: f64 },

    #[error("profile was aborted before reaching its end: {0}")]
    AbortedProfile(String),

    #[error("no amplitude bracket for {target}: {trace}")]
    NoBracket { target: String, trace: String },

    #[error("integration became stiff: {0}")]
    Stiffness(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("region {region} too narrow for the requested window")]
    RegionTooNarrow { region: usize },

    #[error("no Nehari root below t = {t_max:e}")]
    NoRoot { t_max: f64 },

    #[error("log-scale parameter overflowed at level {level}")]
    LogOverflow { level: usize },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OverflowGuard { .. } => "OverflowGuard",
            Error::QuadratureNonConvergence { .. } => "QuadratureNonConvergence",
            Error::StepSizeUnderflow { .. } => "StepSizeUnderflow",
            Error::AbortedProfile(_) => "AbortedProfile",
            Error::NoBracket { .. } => "NoBracket",
            Error::Stiffness(_) => "Stiffness",
            Error::InvalidParams(_) => "InvalidParams",
            Error::Domain(_) => "DomainError",
            Error::RegionTooNarrow { .. } => "RegionTooNarrow",
            Error::NoRoot { .. } => "NoRoot",
            Error::LogOverflow { .. } => "LogOverflow",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
