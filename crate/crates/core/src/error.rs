use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the support of the function evaluated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model parameter violates a bound, e.g. an infeasible moment match.
    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid market instance:\n{0}")]
    InvalidInstance(ValidationReport),

    #[error("hour {hour} is infeasible in every sub-space (binding: {})", families.join(", "))]
    HourInfeasible { hour: usize, families: Vec<String> },
}
