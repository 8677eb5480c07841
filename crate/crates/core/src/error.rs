use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {got}")]
    Shape {
        op: &'static str,
        expected: String,
        got: String,
    },

    #[error("matrix is not Hermitian (max |m - m^dagger| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max |u^dagger u - 1| = {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("density matrix has negative eigenvalue {value:e}")]
    NegativeEigenvalue { value: f64 },

    #[error("density matrix trace {trace} deviates from 1")]
    TraceDeviation { trace: f64 },

    #[error("unitary does not conserve energy (max |[U, H]| = {commutator:e})")]
    NotEnergyConserving { commutator: f64 },

    #[error("{what} = {value} is outside its domain {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} is unsupported for d_b * d_c = {dim} (maximum {max})")]
    UnsupportedDimension {
        what: &'static str,
        dim: usize,
        max: usize,
    },

    #[error("{what} gave up after {attempts} attempts")]
    RetryLimit { what: &'static str, attempts: u64 },

    #[error("spectrum is not normalized: {0}")]
    Normalization(String),

    #[error("empty input to {0}")]
    EmptyInput(&'static str),

    #[error("degenerate input to {op}: {reason}")]
    Degenerate { op: &'static str, reason: String },

    #[error("iteration {iteration} lies outside the closed-form regime")]
    OutOfRegime { iteration: u64 },

    #[error("sample {index}: {source}")]
    Sample {
        index: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    /// Returns the innermost error, unwrapping per-sample context.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sample { source, .. } => source.root(),
            other => other,
        }
    }
}
