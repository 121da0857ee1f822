use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("singular matrix: pivot {pivot:.3e} below threshold")]
    SingularMatrix { pivot: f64 },

    #[error("QR iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("defective matrix: eigenvector overlap {overlap:.3e} below tolerance")]
    DefectiveMatrix { overlap: f64 },

    #[error("matrix is not Hermitian: residual {residual:.3e}")]
    NotHermitian { residual: f64 },

    #[error(
        "defective eigensystem: self-overlap {overlap:.3e} below tolerance (exceptional point)"
    )]
    DefectiveSystem { overlap: f64 },

    #[error("broken phase: max |Im E| = {max_imag:.3e}")]
    BrokenPhase { max_imag: f64 },

    #[error("metric is not positive definite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("no bracket: endpoints {lo} and {hi} share classification {classification}")]
    NoBracket {
        lo: f64,
        hi: f64,
        classification: String,
    },
}

impl Error {
    /// Stable machine-readable code, used in CLI error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSquare { .. } => "not_square",
            Error::NonFinite { .. } => "non_finite",
            Error::SingularMatrix { .. } => "singular_matrix",
            Error::NoConvergence { .. } => "no_convergence",
            Error::DefectiveMatrix { .. } => "defective_matrix",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::DefectiveSystem { .. } => "defective_system",
            Error::BrokenPhase { .. } => "broken_phase",
            Error::NotPositive { .. } => "not_positive",
            Error::InvalidParams(_) => "invalid_params",
            Error::NoBracket { .. } => "no_bracket",
        }
    }

    pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
