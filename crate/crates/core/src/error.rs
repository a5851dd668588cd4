use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative quantity {0} MW")]
    NegativeQuantity(f64),

    #[error("network is disconnected: bus {0} unreachable from the reference bus")]
    Disconnected(usize),

    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,

    #[error("market infeasible: {0}")]
    Infeasible(String),

    #[error("closed-form uncongested clearing invalid: consumer {consumer} would take {demand:.3} MW")]
    ClosedFormInvalid { consumer: usize, demand: f64 },

    #[error("percentage error undefined for a zero benchmark")]
    ZeroBenchmark,

    #[error("unknown supplier {0}")]
    UnknownSupplier(u32),

    #[error("unknown bus {0}")]
    UnknownBus(u32),

    #[error("unknown line `{0}`")]
    UnknownLine(String),

    #[error("trace format: {0}")]
    TraceFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
