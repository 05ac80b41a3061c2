//! Crate-wide error type.

/// Errors produced by losslab operations.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// An argument violated an operation's domain (non-finite, wrong sign,
    /// empty input, dimension mismatch, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input is structurally valid but carries no usable signal
    /// (all points identical, all gradients zero, all-zero histogram).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Training hit a non-finite loss. Carries the diagnostic state:
    /// the epoch that diverged and the losses recorded before it.
    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize, losses_so_far: Vec<f64> },

    /// Malformed dataset or table text.
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::Degenerate(msg.into())
}
