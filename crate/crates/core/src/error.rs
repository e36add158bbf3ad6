use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("kernel is not square: row {row} has {len} entries, expected {expected}")]
    RaggedKernel {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("kernel is empty")]
    EmptyKernel,
    #[error("non-stochastic kernel: row {row} {reason}")]
    NonStochasticKernel { row: usize, reason: String },
    #[error("kernel has no unique stationary law ({closed_classes} closed classes); supply one")]
    NoUniqueStationaryLaw { closed_classes: usize },
    #[error("state {state} has zero stationary mass")]
    ZeroMassState { state: usize },
    #[error("invalid stationary law: {0}")]
    InvalidStationary(String),
    #[error("length mismatch for {what}: got {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("horizon exceeded: requested {requested}, table holds {available}")]
    HorizonExceeded { requested: usize, available: usize },
    #[error("series has {got} terms, at least {required} required")]
    TooFewTerms { got: usize, required: usize },
    #[error("(I - Q) is singular on the zero-mean subspace")]
    SingularSystem,
    #[error("chain is not totally ergodic")]
    NotTotallyErgodic,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("chain spec parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
