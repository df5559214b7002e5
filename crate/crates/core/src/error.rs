//! Error type shared by all modules.

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong in this crate.
///
/// Variants carry enough context to diagnose the failing call without a
/// debugger: offending dimensions, parameter names, file paths.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Tensor arguments whose dimensions do not line up.
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    /// A parameter outside its documented domain.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// CFAR window larger than the map it is applied to.
    #[error("CFAR window {window:?} does not fit map dims {dims:?}")]
    WindowTooLarge { window: [usize; 3], dims: [usize; 3] },

    /// Gradient requested through the hard (non-differentiable) detector.
    #[error("discrete CFAR detection has no gradient; use the relaxed mode")]
    DiscreteBackward,

    /// Model backward called without a cached forward pass.
    #[error("backward called before forward; no cached activations")]
    BackwardBeforeForward,

    /// Data whose (re, im) covariance cannot be whitened.
    #[error("singular (re, im) covariance; input is constant or degenerate")]
    SingularCovariance,

    /// Non-finite value produced by training.
    #[error("non-finite {what} at step {step}; aborting")]
    NonFinite { what: &'static str, step: u64 },

    /// Iterative thresholding reconstruction grew without bound.
    #[error("IMAT reconstruction diverged: energy ratio {ratio:.3e} after {iterations} iterations")]
    ImatDiverged { ratio: f64, iterations: usize },

    /// Binary detection map containing values other than 0 and 1.
    #[error("detection map for {context} must be binary, found {value} at index {index}")]
    NotBinary {
        context: &'static str,
        value: f64,
        index: usize,
    },

    /// I/O failure, annotated with the path involved.
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed container, checkpoint, or metadata file.
    #[error("{path}: invalid format: {reason}")]
    Format {
        path: std::path::PathBuf,
        reason: String,
    },

    /// Refusal to overwrite existing outputs without `force`.
    #[error("{path}: already exists (pass force to overwrite)")]
    AlreadyExists { path: std::path::PathBuf },

    /// JSON (de)serialization failure.
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for [`Error::InvalidParam`].
    pub fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Wraps an I/O error with the path that produced it.
    pub fn io(path: impl Into<std::path::PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Shorthand for [`Error::Format`].
    pub fn format(path: impl Into<std::path::PathBuf>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
