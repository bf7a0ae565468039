//! Error type shared by every module of the engine.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, KrigError>;

#[derive(Debug, Error)]
pub enum KrigError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix not positive definite even with jitter up to {max_jitter:e}")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("theta length mismatch: expected {expected}, got {got}")]
    ThetaLength { expected: usize, got: usize },

    #[error("custom correlation function returned an invalid matrix: {0}")]
    CustomKernelShape(String),

    #[error("custom trend builder returned an invalid matrix: {0}")]
    CustomTrendShape(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("unknown registered name '{0}'")]
    UnknownName(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl KrigError {
    /// CLI exit-code category: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            KrigError::Config(_) | KrigError::UnknownName(_) | KrigError::ThetaLength { .. } => 2,
            KrigError::Data(_) | KrigError::Io(_) | KrigError::DimensionMismatch(_) => 3,
            _ => 4,
        }
    }

    /// Short machine-parsable category tag used in CLI diagnostics.
    pub fn category(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "data",
            _ => "numerical",
        }
    }
}
