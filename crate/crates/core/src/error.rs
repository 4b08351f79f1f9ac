use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("alphabet must contain at least one symbol")]
    EmptyAlphabet,
    #[error("alphabet labels: {0}")]
    InvalidLabels(String),
    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("operation requires arity at least 1")]
    ArityZero,
    #[error("weight {index} must be strictly positive")]
    NonPositiveWeight { index: usize },
    #[error("prefix of length {prefix} exceeds arity {arity}")]
    PrefixTooLong { prefix: usize, arity: usize },
    #[error("table too large: {entries} entries exceeds limit {limit}")]
    TableTooLarge { entries: u128, limit: usize },
    #[error("shift v must be nonnegative")]
    NegativeShift,
    #[error("alphabet size mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid Markov specification: {0}")]
    InvalidMarkov(String),
    #[error("conditioning event has zero probability")]
    ZeroPrefixProbability,
    #[error("invalid coordinate indices i={i}, j={j} for n={n}")]
    InvalidIndices { i: usize, j: usize, n: usize },
    #[error("argument must be strictly positive: {0}")]
    NonPositiveArgument(&'static str),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("LP certificate check failed: {0}")]
    CertificateFailure(String),
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
}
