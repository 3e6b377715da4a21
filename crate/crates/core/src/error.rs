use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {index} = {value:e})")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("matrix is not symmetric within tolerance (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Validation { line: Option<usize>, message: String },

    #[error("cohort is empty")]
    EmptyCohort,

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("fixed-effect design is rank deficient (column `{column}`)")]
    RankDeficient { column: String },

    #[error("optimizer failed to converge after {iterations} iterations: {message}")]
    ConvergenceFailure { iterations: usize, message: String },

    #[error("models are not nested: {0}")]
    NotNested(String),

    #[error("sampler failed at iteration {iteration}: {source}")]
    Sampler {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn validation(line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Validation { line, message: message.into() }
    }
}
