use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    ParameterDomain(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds {tolerance:.1e}")]
    NumericAccuracy { estimate: f64, tolerance: f64 },

    #[error("no finite kappa below the search cap {cap}")]
    NoFiniteKappa { cap: f64 },

    #[error("regime error: {0}")]
    Regime(String),

    #[error("trajectory was truncated before hitting site {n}")]
    Truncated { n: u64 },

    #[error("branch sequence overflowed the floating-point range at generation {generation}")]
    Overflow { generation: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("cdf reconstruction is unstable for M = {m} (maximum {max})")]
    Stability { m: usize, max: usize },

    #[error("data generation failed: {truncated} of {replications} walks truncated")]
    DataGeneration {
        truncated: usize,
        replications: usize,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Short stable identifier used in machine-readable diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ParameterDomain(_) => "parameter_domain",
            Error::NumericAccuracy { .. } => "numeric_accuracy",
            Error::NoFiniteKappa { .. } => "no_finite_kappa",
            Error::Regime(_) => "regime",
            Error::Truncated { .. } => "truncated",
            Error::Overflow { .. } => "overflow",
            Error::DegenerateData(_) => "degenerate_data",
            Error::Stability { .. } => "stability",
            Error::DataGeneration { .. } => "data_generation",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
