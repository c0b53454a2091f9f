use thiserror::Error;

/// Rejected primitive value.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValueError {
    #[error("value {0} is not a finite number in [0, 1]")]
    OutsideUnitInterval(f64),
    #[error("failure rate {0} is not a finite nonnegative number")]
    InvalidRate(f64),
    #[error("unknown ASIL '{0}' (expected QM, A, B, C or D)")]
    UnknownAsil(String),
}

/// Failure to turn model-file text into a [`crate::model::SafetyModel`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("reference error: {message} ('{id}')")]
    Reference { id: String, message: String },
}

impl LoadError {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        LoadError::Schema { location: location.into(), message: message.into() }
    }

    pub(crate) fn reference(id: impl Into<String>, message: impl Into<String>) -> Self {
        LoadError::Reference { id: id.into(), message: message.into() }
    }
}

/// Precondition failures of the analysis operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("operation requires a nonempty input")]
    EmptyInput,
    #[error("failure rate class index {0} is invalid (must be >= 1)")]
    InvalidClass(i64),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("strict mode: intermediate {symbol} = {value} exceeds 1")]
    StrictModelViolation { symbol: &'static str, value: f64 },
    #[error("unknown symbol '{0}'")]
    UnknownSymbol(String),
    #[error("safety case contains a cycle through '{0}'")]
    CyclicCase(String),
    #[error("safety case root '{0}' is not a declared claim")]
    MissingRoot(String),
}
