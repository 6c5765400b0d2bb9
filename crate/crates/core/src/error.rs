use thiserror::Error;

/// Errors raised by the tensor, network and search routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TnError {
    #[error("invalid tensor shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: String },
    #[error("data length {got} does not match product of dims {dims:?} ({expected})")]
    LengthMismatch {
        dims: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("contraction shape error: {0}")]
    ContractionShape(String),
    #[error("invalid bipartition {modes:?} of an order-{order} tensor")]
    InvalidBipartition { modes: Vec<usize>, order: usize },
    #[error("invalid mode {mode}: {reason}")]
    InvalidMode { mode: usize, reason: String },
    #[error("brute-force oracle work {work} exceeds cap {cap}")]
    OracleTooLarge { work: u128, cap: u128 },
    #[error("inconsistent network: {0}")]
    InconsistentNetwork(String),
    #[error("an edge needs two distinct nodes, got ({0}, {0})")]
    SelfEdge(usize),
    #[error("edge ({i}, {j}) was not the last incremented edge (last: {last:?})")]
    StaleIncrement {
        i: usize,
        j: usize,
        last: Option<(usize, usize)>,
    },
    #[error("no edge increment fits the parameter budget of {budget}")]
    BudgetExhausted { budget: usize },
    #[error("target dims {target:?} are incompatible with network dims {network:?}")]
    IncompatibleTarget {
        target: Vec<usize>,
        network: Vec<usize>,
    },
    #[error("relative error is undefined for a zero-norm target")]
    ZeroNormTarget,
    #[error("invalid observations: {0}")]
    InvalidObservations(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("factorization mismatch: {0}")]
    FactorMismatch(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TnError {
    fn from(err: std::io::Error) -> Self {
        TnError::Io(err.to_string())
    }
}

pub type Result<T, E = TnError> = std::result::Result<T, E>;
