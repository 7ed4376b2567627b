use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A particle with zero speed never reaches the wall.
    #[error("zero-speed particle has infinite exit time")]
    InfiniteExitTime,

    #[error("domain error: {0}")]
    Domain(String),

    /// The gas kernel decays like `8/(3 tau^5)`; its fourth moment diverges.
    #[error("divergent moment: gas kernel has no finite moment of order {0}")]
    DivergentMoment(u32),

    /// The Laplace transform of the gas kernel only exists for `Re(z) >= 0`.
    #[error("heavy-tail kernel: no left half-plane continuation (Re(z) = {0})")]
    HeavyTailDomain(f64),

    #[error("operation not supported for kernel variant {0}")]
    UnsupportedVariant(&'static str),

    #[error("non-finite {what} at t = {t}")]
    NonFinite { what: &'static str, t: f64 },

    #[error("contour passes too close to a zero after {retries} retries")]
    Contour { retries: u32 },

    #[error("zero refinement did not converge from seed {seed}")]
    Refinement { seed: num_complex::Complex64 },

    #[error("fit window too late: |mu - mu_inf| underflows to zero")]
    WindowTooLate,

    #[error("fit domain error: {0}")]
    FitDomain(String),

    #[error("empty particle ensemble: initial data has zero mass")]
    EmptyEnsemble,

    #[error("invalid configuration field `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("malformed table: {0}")]
    TableFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
