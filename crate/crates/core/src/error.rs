use thiserror::Error;

/// Errors raised by model construction, enumeration and the audits built on them.
#[derive(Debug, Error)]
pub enum Error {
    /// The group spec is malformed or violates a structural invariant.
    #[error("spec error: {0}")]
    Spec(String),

    /// A query needs data beyond the radius the model was built to.
    #[error("truncation error: radius {requested:.4} exceeds truncation {limit:.4}")]
    Truncation { requested: f64, limit: f64 },

    /// A set (horoball, neighborhood) has no points inside the truncated model.
    #[error("domain truncation: {0}")]
    DomainTruncation(String),

    /// The caller violated an operation precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// A graph boundary proxy sits too close to the basepoint.
    #[error("horizon error: proxy at distance {distance} is inside horizon {horizon}")]
    Horizon { distance: f64, horizon: f64 },

    /// A least-squares fit had too little data.
    #[error("fit error: {0}")]
    Fit(String),

    /// The presentation is outside what the backend supports.
    #[error("unsupported presentation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_truncation(requested: f64, limit: f64) -> Result<()> {
    if requested > limit + 1e-9 {
        Err(Error::Truncation { requested, limit })
    } else {
        Ok(())
    }
}
