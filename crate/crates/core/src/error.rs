use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error at row {row}, column '{column}': {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("optimizer did not converge: {message} (best objective {best_value})")]
    NonConvergence {
        message: String,
        best_point: Vec<f64>,
        best_value: f64,
    },

    #[error("rank-deficient regressors; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    ///
    /// 1 = usage, 2 = data, 3 = estimation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Ingest { .. }
            | Error::Data(_)
            | Error::Domain(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::InvalidSpec(_)
            | Error::NonConvergence { .. }
            | Error::RankDeficient { .. }
            | Error::Degenerate(_)
            | Error::Estimation(_) => 3,
        }
    }

    /// Prefix the message with context while keeping the exit-code class.
    pub fn context(self, ctx: &str) -> Error {
        match self {
            Error::Data(m) => Error::Data(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::InvalidSpec(m) => Error::InvalidSpec(format!("{ctx}: {m}")),
            Error::Degenerate(m) => Error::Degenerate(format!("{ctx}: {m}")),
            Error::Estimation(m) => Error::Estimation(format!("{ctx}: {m}")),
            Error::RankDeficient { columns } => {
                Error::Estimation(format!("{ctx}: rank-deficient regressors ({})", columns.join(", ")))
            }
            Error::NonConvergence { message, .. } => {
                Error::Estimation(format!("{ctx}: optimizer did not converge ({message})"))
            }
            other => other,
        }
    }
}
