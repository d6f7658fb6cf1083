use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("N ≥ 1 required")]
    EmptyDataset,

    #[error("P ≥ 1 required")]
    NoFeatures,

    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-binary label at row {row}")]
    NonBinaryLabel { row: usize },

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("prediction at index {index} is outside [0, 1]: {value}")]
    PredictionOutOfRange { index: usize, value: f64 },

    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("degenerate labels: both classes are required")]
    DegenerateLabels,

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("coefficient vector is identically zero")]
    ZeroCoefficients,

    #[error("enumeration space of {size} points exceeds the cap of {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("no coordinate has more than one admissible value")]
    NoMoves,

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("non-numeric value `{value}` in column `{column}` at row {row}")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("unlisted category `{value}` in column `{column}` at row {row}")]
    UnlistedCategory {
        row: usize,
        column: String,
        value: String,
    },

    #[error("fold {fold} of repeat {repeat} contains a single class")]
    SingleClassFold { repeat: usize, fold: usize },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by an unusable configuration rather than by
    /// the data itself. The CLI maps these to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::InvalidConfig(_)
                | Error::EnumerationCap { .. }
                | Error::NoMoves
                | Error::UnknownColumn(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
