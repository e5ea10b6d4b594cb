use thiserror::Error;

/// Failure modes shared across the crate.
///
/// `exit_code` groups them the way the CLI reports them: config/usage
/// problems (2), numerical breakdown (3); diagnostic failures are not errors
/// (checkers return reports) and map to exit code 1 in the binary.
#[derive(Debug, Error)]
pub enum BicellError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field does not live on the expected grid")]
    GridMismatch,

    #[error("config error: {0}")]
    Config(String),

    #[error("blowup guard tripped at t = {t}: max |field| = {max_abs:e} exceeds {threshold:e}")]
    Divergence { t: f64, max_abs: f64, threshold: f64 },

    #[error("non-finite value produced at t = {t}")]
    NonFinite { t: f64 },

    #[error("tangent bundle degenerated at t = {t}: {detail}")]
    Degeneracy { t: f64, detail: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

impl BicellError {
    /// Process exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            BicellError::InvalidArgument(_)
            | BicellError::Config(_)
            | BicellError::GridMismatch => 2,
            BicellError::Divergence { .. }
            | BicellError::NonFinite { .. }
            | BicellError::Degeneracy { .. } => 3,
            BicellError::Io(_) | BicellError::Format(_) => 2,
        }
    }
}
