use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {mode} out of range for a {n_modes}-mode state")]
    ModeOutOfRange { mode: usize, n_modes: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix dimension {0} is not an even number of quadratures")]
    OddDimension(usize),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (largest deviation {0:e})")]
    NotSymmetric(f64),
    #[error("diagonal entry {index} is not positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },
    #[error("matrix does not preserve the symplectic form (defect {0:e})")]
    NotSymplectic(f64),
    #[error("invalid mode set: {0}")]
    InvalidModeSet(String),
    #[error("beam splitter needs two distinct modes, got {0} twice")]
    SameMode(usize),
    #[error("transmissivity {0} outside [0, 1]")]
    InvalidTransmissivity(f64),
    #[error("displacement variance must be nonnegative, got {0}")]
    NegativeVariance(f64),
    #[error("signal power must be nonnegative, got {0}")]
    NegativeSignalPower(f64),
    #[error("squeezing parameter must be positive and finite, got {0}")]
    InvalidSqueezing(f64),
    #[error("mean photon number must be nonnegative and finite, got {0}")]
    InvalidPhotonNumber(f64),
    #[error("expected a {expected}-mode state, got {found} modes")]
    WrongModeCount { expected: usize, found: usize },
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("per-element uncertainties are required")]
    MissingSigma,
    #[error("at least {min} Monte Carlo draws are required, got {found}")]
    TooFewDraws { min: usize, found: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Parse failure with a 1-based source position.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}
