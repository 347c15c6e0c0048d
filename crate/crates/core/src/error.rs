use crate::special_fn::SpecialFnError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),

    /// A series expansion did not reach its stopping criterion.
    #[error("{what} did not converge after {terms} terms (partial value {partial})")]
    SeriesDivergence {
        what: &'static str,
        partial: f64,
        terms: usize,
    },

    /// Adaptive quadrature stopped before reaching the requested tolerance.
    #[error("quadrature did not converge: estimated error {achieved:e} > requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
