use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("at least {required} observations are required, got {got}")]
    TooFewObservations { required: usize, got: usize },

    #[error("at least one predictor column is required")]
    NoPredictors,

    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite {
        what: &'static str,
        row: usize,
        col: usize,
    },

    #[error("all predictor rows are identical; the tie-corrected denominator is zero")]
    AllPredictorsTied,

    #[error("the response is constant")]
    DegenerateResponse,

    #[error("at least two predictor groups are required, found {0}")]
    SingleGroup(usize),

    #[error("group {0} is empty")]
    EmptyGroup(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model is not a two-group family: {0}")]
    NotTwoGroup(&'static str),

    #[error("best-subset search over {p} predictors exceeds the budget of {max_p}")]
    SubsetBudgetExceeded { p: usize, max_p: usize },

    #[error("column index {index} out of range for {p} predictors")]
    ColumnOutOfRange { index: usize, p: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
