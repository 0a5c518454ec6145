use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max |M - M^dagger| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a density operator: {0}")]
    NotDensity(String),

    #[error("{name} = {value:?} is outside [{lo:?}, {hi:?}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("infeasible family point (epsilon = {epsilon}, c22 = {c22}); need -1 <= c22 <= 2 epsilon - 1")]
    InfeasiblePoint { epsilon: f64, c22: f64 },

    #[error("coefficients do not describe a positive operator (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("probability table is not normalized (total = {total})")]
    NotNormalized { total: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("key rate has no sign change on the bracket for curve {curve}")]
    NoSignChange { curve: String },

    #[error("no feasible sample found at epsilon = {epsilon} after {attempts} attempts")]
    NoFeasibleSample { epsilon: f64, attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<f64> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            lo,
            hi,
        })
    }
}
