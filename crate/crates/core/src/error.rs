use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: bad cutoff, mismatched group, wrong symbol kind, ...
    #[error("domain error: {0}")]
    Domain(String),

    /// Request exceeds what the implementation supports (e.g. spin above the
    /// Wigner-d cap, dense eigenproblem above budget).
    #[error("capability error: {0}")]
    Capability(String),

    #[error("non-finite value at quadrature node {node}")]
    NonFinite { node: usize },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    /// The relevant criterion series was detected to diverge, so the
    /// requested quantity (trace, n_r bound, ...) is not defined.
    #[error("refused, criterion series diverges: {0}")]
    Divergent(String),

    /// Hypotheses of a trace/eigenvalue identity are not satisfied.
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
