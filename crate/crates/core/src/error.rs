use thiserror::Error;

/// Errors produced by the numerical-range library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^H| entry is {max_asymmetry:e}")]
    NotHermitian { max_asymmetry: f64 },

    #[error("unsupported dimension {got} (expected {expected})")]
    BadDim { expected: &'static str, got: usize },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("eigensolver did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("operator is not swap symmetric: max coefficient mismatch {max_violation:e}")]
    NotSwapSymmetric { max_violation: f64 },

    #[error("vector is not normalized: norm {norm}")]
    NotNormalized { norm: f64 },

    #[error("quadratic map is not homogeneous: max constant/linear coefficient {max_coefficient:e}")]
    NotHomogeneous { max_coefficient: f64 },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("support slice has no active points")]
    DegenerateSlice,

    #[error("parameter out of domain: {0}")]
    OutOfDomain(String),

    #[error("no example instance with index {0}")]
    BadIndex(usize),

    #[error("unknown instance {0:?}")]
    NotFound(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

impl Error {
    /// Attaches a location (file, matrix name, ...) to the message.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error, with all context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
