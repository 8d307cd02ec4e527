use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid sites: {0}")]
    InvalidSites(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell {site} too large for the 3x3 periodic image construction (circumradius {radius:.4}, shorter period {period:.4})")]
    CellTooLarge { site: usize, radius: f64, period: f64 },

    #[error("transport solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("line search could not keep every cell nonempty (iteration {iteration})")]
    EmptyCellUnrecoverable { iteration: usize },

    #[error("instance too large for the brute-force oracle: {0}")]
    InstanceTooLarge(String),

    #[error("lattice fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
