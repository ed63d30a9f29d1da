use thiserror::Error;

use crate::model_space::Gamma;

/// Everything that can go wrong inside the library.
///
/// Variants fall into two families, which the CLI maps onto distinct exit
/// codes: validation problems (bad input, bad configuration) and numerical
/// failures (singular designs, quadrature that will not converge).
#[derive(Debug, Error)]
pub enum Error {
    #[error("model space with d = {d} covariates exceeds the enumeration cap of {cap}")]
    Capacity { d: usize, cap: usize },

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("design for model {gamma} is rank deficient")]
    SingularDesign { gamma: Gamma },

    #[error("response is constant (total sum of squares is zero)")]
    DegenerateResponse,

    #[error("quadrature did not converge for model {gamma:?}: last estimates {previous} and {last}")]
    QuadratureFailure {
        gamma: Option<Gamma>,
        previous: f64,
        last: f64,
    },

    #[error("matrix X'X for the projection design is singular")]
    Singular,

    #[error("KL divergence needs matching models: {0}")]
    Contract(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("csv error in {path}: {message}")]
    Csv { path: String, message: String },

    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a finite number")]
    Parse {
        path: String,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: column '{column}' has non-positive value {value} at row {row}; log transform needs strictly positive data")]
    NonPositive {
        path: String,
        row: usize,
        column: String,
        value: f64,
    },

    #[error("header problem in {path}: {message}")]
    Header { path: String, message: String },

    #[error("dataset integrity check failed for {file}: {message}")]
    Integrity { file: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularDesign { .. }
            | Error::QuadratureFailure { .. }
            | Error::Singular => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
