use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M†| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not unitary: |U†U - I|_HS = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("state vector is not normalized: |v| = {norm}")]
    NotNormalized { norm: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("time {t} s lies outside the schedule [0, {duration}] s")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("duplicate oscillation frequency {0} rad/s")]
    DuplicateFrequency(f64),

    #[error("unknown gate label `{0}`")]
    UnknownGate(String),

    #[error("propagation did not converge: refinement change {delta:.3e} after {halvings} halvings")]
    NotConverged { delta: f64, halvings: usize },

    #[error("schedule parse error at line {line}: {reason}")]
    ScheduleParse { line: usize, reason: String },

    #[error("config error at line {line}, field `{field}`: {reason}")]
    Config {
        line: usize,
        field: String,
        reason: String,
    },

    #[error("schedule audit failed: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
