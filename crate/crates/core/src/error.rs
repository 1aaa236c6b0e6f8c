use thiserror::Error;

/// Errors raised by the causal-discovery pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series `{name}` has length {found}, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("series `{name}` contains a non-finite value at index {index}")]
    NonFinite { name: String, index: usize },
    #[error("duplicate series name `{0}`")]
    DuplicateName(String),
    #[error("a dataset needs at least two series, found {0}")]
    TooFewSeries(usize),
    #[error("series is too short: need at least {needed} values, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("invalid seasonal period {0}")]
    InvalidPeriod(usize),
    #[error("series `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("bin count {0} is below the minimum of 2")]
    DegenerateBins(usize),
    #[error("histogram has no samples")]
    EmptyHistogram,
    #[error("lag {lag} is invalid for a series of length {length}")]
    LagTooLarge { lag: usize, length: usize },
    #[error("binning spec does not cover variable `{0}`")]
    UnknownVariable(String),
    #[error("design matrix is singular (condition number {0:.3e})")]
    SingularDesign(f64),
    #[error("variable sets differ between graphs")]
    VariableMismatch,
    #[error("unknown export format `{0}`")]
    UnknownFormat(String),
    #[error("subsample length {q} must be shorter than the series length {len}")]
    WindowTooLong { q: usize, len: usize },
    #[error("{n} nonoverlapping windows of length {q} do not fit in {len} samples")]
    TooManyWindows { n: usize, q: usize, len: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Short machine-readable tag, used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::DuplicateName(_) => "DuplicateName",
            Error::TooFewSeries(_) => "TooFewSeries",
            Error::TooShort { .. } => "TooShort",
            Error::InvalidPeriod(_) => "InvalidPeriod",
            Error::ZeroVariance(_) => "ZeroVariance",
            Error::DegenerateBins(_) => "DegenerateBins",
            Error::EmptyHistogram => "EmptyHistogram",
            Error::LagTooLarge { .. } => "LagTooLarge",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::SingularDesign(_) => "SingularDesign",
            Error::VariableMismatch => "VariableMismatch",
            Error::UnknownFormat(_) => "UnknownFormat",
            Error::WindowTooLong { .. } => "WindowTooLong",
            Error::TooManyWindows { .. } => "TooManyWindows",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Parse(_) => "Parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
