use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock truncation n_max = {0} is too small (need n_max >= 2)")]
    TruncationTooSmall(usize),

    #[error("unknown operator kind `{0}`")]
    UnknownOperator(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient truncation: {0}")]
    InsufficientTruncation(String),

    #[error("frequency {omega:.6e} outside tabulated range [{lo:.6e}, {hi:.6e}]")]
    OutOfTable { omega: f64, lo: f64, hi: f64 },

    #[error("steady state is not unique: {0} near-zero modes (singular values {1:?})")]
    DegenerateSteadyState(usize, Vec<f64>),

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}, error norm {err:.3e})")]
    StepSizeUnderflow { t: f64, h: f64, err: f64 },

    #[error("step budget of {steps} exhausted at t = {t:.6e}")]
    StepLimit { t: f64, steps: usize },

    #[error("fit did not converge: {0}")]
    FitFailed(String),

    #[error("malformed table at line {line}: {msg}")]
    Table { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
