use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// The five ways a constraint document can be rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    DuplicateAttribute(String),
    UndeclaredAttribute(String),
    SelfReference(String),
    GroupTooSmall { group: String, size: usize },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::DuplicateAttribute(name) => write!(f, "duplicate attribute `{name}`"),
            ParseErrorKind::UndeclaredAttribute(name) => {
                write!(f, "reference to undeclared attribute `{name}`")
            }
            ParseErrorKind::SelfReference(name) => {
                write!(f, "attribute `{name}` refers to itself")
            }
            ParseErrorKind::GroupTooSmall { group, size } => {
                write!(f, "group `{group}` has {size} member(s), at least 2 required")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("rejection sampling budget exhausted after {attempts} attempts for one row")]
    SamplingBudget { attempts: usize },

    #[error("insufficient scores for target rate: have {have}, need at least {need}")]
    InsufficientScores { have: usize, need: usize },

    #[error("demographic `{0}` has fewer than 2 records")]
    EmptyDemographic(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable short code used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(e) => match e.kind {
                ParseErrorKind::Syntax(_) => "E_SYNTAX",
                ParseErrorKind::DuplicateAttribute(_) => "E_DUPLICATE",
                ParseErrorKind::UndeclaredAttribute(_) => "E_UNDECLARED",
                ParseErrorKind::SelfReference(_) => "E_SELF_REFERENCE",
                ParseErrorKind::GroupTooSmall { .. } => "E_GROUP_SIZE",
            },
            Error::Dimension(_) => "E_DIMENSION",
            Error::NonFinite { .. } => "E_NON_FINITE",
            Error::Input(_) => "E_INPUT",
            Error::Format(_) => "E_FORMAT",
            Error::Divergence { .. } => "E_DIVERGENCE",
            Error::SamplingBudget { .. } => "E_SAMPLING",
            Error::InsufficientScores { .. } => "E_INSUFFICIENT",
            Error::EmptyDemographic(_) => "E_EMPTY_DEMOGRAPHIC",
            Error::Io(_) => "E_IO",
            Error::Csv(_) => "E_CSV",
        }
    }
}
