use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point is off the variety (constraint residual {residual:.3e} > {tolerance:.1e})")]
    OffVariety { residual: f64, tolerance: f64 },

    #[error("point is a singular point of the variety; evaluate it on the child stratum {child}")]
    SingularPoint { child: String },

    #[error("no critical point found")]
    NoCriticalPoint,

    #[error("all {starts} starts failed to converge")]
    NotConverged { starts: usize },

    #[error("search space too large: {0}")]
    SearchTooLarge(String),

    #[error("outside certified regime: {0}")]
    OutsideCertifiedRegime(String),

    #[error("modulus {0} is not a prime")]
    CompositeModulus(u64),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Errors caused by the caller's parameters rather than by a numeric
    /// procedure failing.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::ShapeMismatch(_)
                | Error::InvalidInput(_)
                | Error::SearchTooLarge(_)
                | Error::OutsideCertifiedRegime(_)
                | Error::CompositeModulus(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
