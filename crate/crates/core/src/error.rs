use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("generator {index} has determinant {det:.15} (expected 1 within {tol:e})")]
    NonUnitDeterminant { index: usize, det: f64, tol: f64 },

    #[error("perturbation profile is not group invariant: residual {residual:e} exceeds {tol:e}")]
    NotInvariant { residual: f64, tol: f64 },

    #[error("model is not Anosov: {0}")]
    NotAnosov(String),

    #[error("integration step too large: trajectory left the neighbouring polygons at t = {t}")]
    StepTooLarge { t: f64 },

    #[error("requested time {t} exceeds the configured horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    #[error("unstable Riccati solution broke down (u = {u}) at s = {s}")]
    RiccatiBreakdown { u: f64, s: f64 },

    #[error("invalid spectrum: {0}")]
    Spectrum(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    /// Short machine-readable tag, used by the command-line error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::NonUnitDeterminant { .. } => "non_unit_determinant",
            Error::NotInvariant { .. } => "not_invariant",
            Error::NotAnosov(_) => "not_anosov",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::HorizonExceeded { .. } => "horizon_exceeded",
            Error::RiccatiBreakdown { .. } => "riccati_breakdown",
            Error::Spectrum(_) => "spectrum",
            Error::Input(_) => "input",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
            Error::Toml(_) => "toml",
        }
    }
}
