use alloc::string::String;

use thiserror::Error;

use crate::sdp::SolveStatus;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable set must not be empty")]
    EmptyVariableSet,
    #[error("variable name must not be empty")]
    EmptyName,
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("operands belong to different variable sets")]
    VariableSetMismatch,
    #[error("letter {letter} is out of range for a set of {count} variables")]
    LetterOutOfRange { letter: usize, count: usize },
    #[error("relaxation order {order} is too low for {constraint} of degree {degree}")]
    OrderTooLow {
        constraint: String,
        degree: usize,
        order: usize,
    },
    #[error("objective polynomial is empty")]
    EmptyObjective,
    #[error("missing moment `{0}`")]
    MissingMoment(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("matrix is not positive semidefinite: {0}")]
    NotPsd(String),
    #[error("degenerate nrmse denominator for subgroup `{0}`")]
    DegenerateDenominator(String),
    #[error("missing forecast for period {0}")]
    MissingForecast(u32),
    #[error("solver finished with status {0}")]
    NonOptimal(SolveStatus),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
