//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read dataset file `{path}`: {source}")]
    DatasetFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in `{path}`: {message}")]
    MalformedCsv { path: PathBuf, message: String },

    #[error("label column `{column}` not found in `{path}` (columns: {available:?})")]
    MissingLabelColumn {
        column: String,
        path: PathBuf,
        available: Vec<String>,
    },

    #[error("non-numeric feature value `{value}` at data row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("expected exactly two distinct label values, found {0:?}")]
    LabelCardinality(Vec<String>),

    #[error(
        "positive label value `{value}` does not occur in the data; values present: {found:?}"
    )]
    PositiveValueAbsent { value: String, found: Vec<String> },

    #[error("label at row {row} is {value}; labels must be -1 or +1")]
    InvalidLabel { row: usize, value: i8 },

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("dataset must contain at least {min} rows, got {got}")]
    TooFewRows { min: usize, got: usize },

    #[error("feature matrix has {rows} rows but {labels} labels")]
    RowLabelMismatch { rows: usize, labels: usize },

    #[error("training data contains a single class")]
    SingleClassTraining,

    #[error("expected {expected} feature columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a non-empty dataset")]
    EmptyDataset,

    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),

    #[error(
        "split leaves the training side without both classes; adjust the fraction or stratify"
    )]
    DegenerateSplit,

    #[error("sampling ratios must satisfy 0 <= a, 0 <= b, a + b <= 1; got a={a}, b={b}")]
    InvalidSamplingRatio { a: f64, b: f64 },

    #[error("budget {budget} exceeds the number of training instances {n}")]
    BudgetTooLarge { budget: usize, n: usize },

    #[error("flip costs must be positive; got {0}")]
    NonPositiveCost(f64),

    #[error("this strategy requires uniform flip costs")]
    VariedCostUnsupported,

    #[error("exhaustive solver is limited to k <= {max} candidates, got k = {k}")]
    CandidateSetTooLarge { k: usize, max: usize },

    #[error("surrogate fit failed at iteration {iteration}: {source}")]
    SurrogateFit {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot write output `{path}`: {source}")]
    OutputIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// CLI exit class: 1 for configuration/input problems, 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::DatasetFile { .. }
            | Error::MalformedCsv { .. }
            | Error::MissingLabelColumn { .. }
            | Error::NonNumericCell { .. }
            | Error::LabelCardinality(_)
            | Error::PositiveValueAbsent { .. }
            | Error::TooFewRows { .. }
            | Error::InvalidFraction(_)
            | Error::InvalidSamplingRatio { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidConfig(_) => 1,
            _ => 2,
        }
    }
}
