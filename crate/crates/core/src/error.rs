use thiserror::Error;

/// Errors raised by models, the splitting engine and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("path cap of {cap} states reached before the path was stopped")]
    PathCapExceeded { cap: usize },

    #[error("rejection sampling gave up after {attempts} attempts above level {level}")]
    RejectionCapExceeded { attempts: usize, level: f64 },

    #[error("maximum of {max_iterations} iterations exceeded (K history length {})", k_history.len())]
    MaxIterations {
        max_iterations: usize,
        k_history: Vec<usize>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ancestry was not recorded for this run")]
    AncestryNotRecorded,

    #[error("splitting step called with no replica above level {level}")]
    NoSurvivors { level: f64 },

    #[error("model assumption violated: {0}")]
    ModelAssumption(String),

    #[error("cholesky factorization failed")]
    Factorization,

    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether the error comes from configuration validation rather than a failing run.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Toml(_))
    }
}
