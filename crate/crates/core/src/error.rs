use thiserror::Error;

/// Errors raised by the simulation, correction and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode count must be at least 1")]
    ZeroModes,

    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("mode index {0} listed more than once")]
    DuplicateMode(usize),

    #[error("measured mode set is empty")]
    EmptyMeasurement,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("invalid resource coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("oracle supports n <= {limit}, got n = {n}")]
    OracleLimit { n: usize, limit: usize },

    #[error("conditional state for pattern {pattern} does not factorize: {reason}")]
    Factorization { pattern: String, reason: String },

    #[error("oracle and analytic paths disagree by {deviation:.3e} (tolerance {tolerance:.1e})")]
    OracleMismatch { deviation: f64, tolerance: f64 },

    #[error("no relative phase reconciles the oracle and analytic qubits (magnitude gap {gap:.3e})")]
    PhaseIrreconcilable { gap: f64 },

    #[error("outcome m = {m} has zero probability")]
    ZeroProbability { m: usize },

    #[error("outcome m = {m} is not a success-class outcome (valid range 1..={n})")]
    NotSuccessOutcome { m: usize, n: usize },

    #[error("error-correcting measurement undefined for m = {m}: c_m and c_(m-1) both vanish")]
    UndefinedKraus { m: usize },

    #[error("sequence has a plateau (adjacent equal weights); the extrema formula does not apply")]
    Plateau,

    #[error("expected a single-photon state, found {0}")]
    NotSinglePhoton(String),

    #[error("invalid simplex point: {0}")]
    InvalidPoint(String),

    #[error("Monte-Carlo estimate {estimate} disagrees with closed form {closed_form} beyond {sigmas} standard errors (se {std_error:.3e})")]
    MonteCarloMismatch {
        estimate: f64,
        closed_form: f64,
        std_error: f64,
        sigmas: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient file: {0}")]
    CoefficientFile(String),
}

impl Error {
    /// True for errors that signal an internal inconsistency between two
    /// independent computation routes rather than bad input.
    pub fn is_consistency_failure(&self) -> bool {
        matches!(
            self,
            Error::Factorization { .. }
                | Error::OracleMismatch { .. }
                | Error::PhaseIrreconcilable { .. }
                | Error::MonteCarloMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
