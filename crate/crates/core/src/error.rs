use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// The header row lacks columns that every record needs.
    #[error("missing mandatory columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid learner or search configuration, raised before any compute.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("column layout mismatch: {0}")]
    ColumnMismatch(String),

    #[error("model serialization error: {0}")]
    Serialization(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
