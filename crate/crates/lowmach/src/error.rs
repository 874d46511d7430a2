use thiserror::Error;

/// Errors raised by the construction, the solvers and the runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("the zero mode (0,0,0) has no acoustic eigenfunction")]
    ZeroMode,

    #[error("mode ({0},{1},{2}) lies outside the truncation")]
    OutsideTruncation(i32, i32, i32),

    #[error("reality constraint violated at mode ({k1},{k2},{k3}): defect {defect:e}")]
    RealityViolation { k1: i32, k2: i32, k3: i32, defect: f64 },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("time step guard: {0}")]
    StepGuard(String),

    #[error("blow-up guard tripped at t = {t}: norm grew by {growth:e}")]
    BlowUp { t: f64, growth: f64 },

    #[error("decay tolerance violated: {0}")]
    Decay(String),

    #[error("missing component for tier {tier}: {what}")]
    MissingComponent { tier: char, what: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
