use std::path::PathBuf;

/// Errors produced anywhere in the CSP pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "{0} is not positive definite; repair it with repair_positive_definite before solving"
    )]
    NotPositiveDefinite(String),

    #[error("symmetric eigendecomposition of {0} did not converge")]
    NoConvergence(String),

    #[error("invalid distance matrix: {0}")]
    InvalidDistance(String),

    #[error("unsupported distance '{name}' (supported: {supported})")]
    UnsupportedDistance { name: String, supported: String },

    #[error("degenerate trial: {0}")]
    DegenerateTrial(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("{}: {message}", location(path, *line))]
    Parse {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported format version {found} (this build reads version {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),
}

fn location(path: &std::path::Path, line: Option<u64>) -> String {
    match line {
        Some(line) => format!("{}:{}", path.display(), line),
        None => path.display().to_string(),
    }
}

impl Error {
    /// True for errors caused by how the caller configured a run rather than
    /// by the data or the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidArgument(_) | Error::UnsupportedDistance { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
