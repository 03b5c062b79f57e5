use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no households left after cleaning")]
    EmptyPanel,

    #[error("price of item `{item}` is not observed at observation {t}; impute before building the expenditure matrix")]
    IncompletePrices { t: usize, item: String },

    #[error("no observed price for item(s): {}", .items.join(", "))]
    UnpriceableItems { items: Vec<String> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle refuses {t} observations (limit {limit})")]
    OracleTooLarge { t: usize, limit: usize },

    #[error("design matrix is rank deficient; collinear column(s): {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("design matrix must be standardized before penalized fitting (column `{column}`)")]
    NotStandardized { column: String },

    #[error("group `{0}` has no columns")]
    EmptyGroup(String),

    #[error("Cronbach's alpha is undefined when the total score has zero variance")]
    UndefinedAlpha,

    #[error("insufficient data: {rows} rows for {params} parameters")]
    InsufficientData { rows: usize, params: usize },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
