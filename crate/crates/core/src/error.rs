use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature on [{lower}, {upper}] did not converge: achieved error {achieved:e}, requested {requested:e}"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("quadrature failed on cell {cell}: {source}")]
    CellQuadrature {
        cell: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid density parameter: {0}")]
    InvalidDensity(String),

    #[error(
        "rejection acceptance rate {rate:e} is below the floor {floor:e} (M * nu0(I) = {envelope_ratio})"
    )]
    AcceptanceTooLow {
        rate: f64,
        floor: f64,
        envelope_ratio: f64,
    },

    #[error("partition with m = {m} under-resolves the quadrature tolerance; use m <= {suggested_max}")]
    PartitionTooFine { m: usize, suggested_max: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn in_cell(self, cell: usize) -> Self {
        Error::CellQuadrature {
            cell,
            source: Box::new(self),
        }
    }
}
