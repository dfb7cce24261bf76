//! Shared error type for every numerical operation in the crate.

use thiserror::Error;

fn format_rows(rows: &[(usize, String)]) -> String {
    let shown: Vec<String> = rows
        .iter()
        .take(5)
        .map(|(i, why)| format!("row {i}: {why}"))
        .collect();
    let mut out = shown.join("; ");
    if rows.len() > 5 {
        out.push_str(&format!(" (+{} more)", rows.len() - 5));
    }
    out
}

/// Failures surfaced by grid construction, quadrature, solvers and parsers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Grid bounds or point count violate the grid invariants.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A scalar argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The grid does not span enough of the function's support.
    #[error("domain too narrow: {0}")]
    DomainTooNarrow(String),

    /// Values are not a usable probability density (negative entries or
    /// normalization off by more than the documented tolerance).
    #[error("not a density: {0}")]
    NotADensity(String),

    /// An amplitude is not L2-normalized to within tolerance.
    #[error("not normalized: {0}")]
    NotNormalized(String),

    /// Mixture weights are negative or do not sum to one.
    #[error("bad weights: {0}")]
    BadWeights(String),

    /// The operation is defined only for a single basis state.
    #[error("not a pure strategy: {0}")]
    NotPure(String),

    /// An iterative eigenpair solve exceeded its iteration cap.
    #[error("eigenpair {index} failed to converge: {message}")]
    ConvergenceFailure { index: usize, message: String },

    /// The amplitude has not decayed at the grid boundary, so a discrete
    /// transform would wrap tail mass around the domain.
    #[error("leaky domain: {0}")]
    LeakyDomain(String),

    /// A phase-space slice carries too little mass to normalize.
    #[error("degenerate slice: {0}")]
    SliceDegenerate(String),

    /// The transaction stream contained no data rows.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Rows that failed to parse, with their 1-based line numbers.
    #[error("malformed rows: {}", format_rows(.0))]
    MalformedRows(Vec<(usize, String)>),

    /// Not enough records for the requested estimate.
    #[error("too few records: {0}")]
    TooFewRecords(String),

    /// Not enough Monte-Carlo trials for a meaningful variance estimate.
    #[error("too few trials: {0}")]
    TooFewTrials(String),

    /// Sample risk is zero, negative or non-finite; no strategy fits it.
    #[error("degenerate risk: {0}")]
    DegenerateRisk(String),
}

impl CoreError {
    /// Stable machine-readable tag, used by callers that serialize errors.
    pub fn kind(&self) -> &'static str {
        match self {
            CoreError::InvalidGrid(_) => "InvalidGrid",
            CoreError::InvalidParameter(_) => "InvalidParameter",
            CoreError::DomainTooNarrow(_) => "DomainTooNarrow",
            CoreError::NotADensity(_) => "NotADensity",
            CoreError::NotNormalized(_) => "NotNormalized",
            CoreError::BadWeights(_) => "BadWeights",
            CoreError::NotPure(_) => "NotPure",
            CoreError::ConvergenceFailure { .. } => "ConvergenceFailure",
            CoreError::LeakyDomain(_) => "LeakyDomain",
            CoreError::SliceDegenerate(_) => "SliceDegenerate",
            CoreError::EmptyInput(_) => "EmptyInput",
            CoreError::MalformedRows(_) => "MalformedRow",
            CoreError::TooFewRecords(_) => "TooFewRecords",
            CoreError::TooFewTrials(_) => "TooFewTrials",
            CoreError::DegenerateRisk(_) => "DegenerateRisk",
        }
    }

    /// True for errors that arise while crunching numbers, as opposed to
    /// rejecting bad input up front. Drives the CLI exit-code split.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CoreError::ConvergenceFailure { .. }
                | CoreError::NotADensity(_)
                | CoreError::SliceDegenerate(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;
