use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The geodesic left the chart domain after this fraction of the unit parameter interval.
    #[error("geodesic left the chart domain at parameter fraction {fraction:.6}")]
    DomainEscape { fraction: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid curve: {0}")]
    Validation(String),

    #[error("function is not temporal on the sample (grid minimum {constant:.6e})")]
    NotTemporalOnSample { constant: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("point lies outside the certified neighborhood (norm {norm:.6e} >= radius {radius:.6e})")]
    OutOfNeighborhood { norm: f64, radius: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),
}
