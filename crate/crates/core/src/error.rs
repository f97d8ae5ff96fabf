use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    Value(String),

    #[error("scale separation violated: xi = {xi} but lambda/10 = {limit}")]
    ScaleSeparationViolated { xi: f64, limit: f64 },

    #[error("geometry violated: {0}")]
    GeometryViolated(String),

    #[error("iterative solve stopped after {iterations} iterations with residual {residual:e}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("strip truncation too tight: {0}")]
    TruncationTooTight(String),

    #[error("dispersion relation is degenerate (A22 = {a22})")]
    DegenerateDispersion { a22: f64 },

    #[error("interface system is singular at k1 = {k1}")]
    SingularInterfaceSystem { k1: Complex64 },

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureFailure {
        value: Complex64,
        estimate: f64,
        tol: f64,
    },

    #[error("evaluation point is within the near-boundary exclusion zone")]
    NearBoundary,

    #[error("boundary integral system is numerically singular (condition estimate {condition:e})")]
    AssemblySingular { condition: f64 },

    #[error("linear solve residual {residual:e} exceeds {limit:e}")]
    ResidualTooHigh { residual: f64, limit: f64 },

    #[error(
        "estimated factorization size {estimated_bytes} bytes exceeds the budget of {budget_bytes} bytes; \
         coarsen the grid, shrink the box or raise CAMOSCAT_MEMORY_BUDGET"
    )]
    OutOfMemory {
        estimated_bytes: u64,
        budget_bytes: u64,
    },

    #[error("comparison window lies outside the field grid")]
    WindowOutsideGrid,

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn value(msg: impl Into<String>) -> Self {
        Error::Value(msg.into())
    }

    pub(crate) fn geometry(msg: impl Into<String>) -> Self {
        Error::GeometryViolated(msg.into())
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::TruncationTooTight(_)
                | Error::DegenerateDispersion { .. }
                | Error::SingularInterfaceSystem { .. }
                | Error::QuadratureFailure { .. }
                | Error::AssemblySingular { .. }
                | Error::ResidualTooHigh { .. }
                | Error::OutOfMemory { .. }
                | Error::Factorization(_)
        )
    }
}
