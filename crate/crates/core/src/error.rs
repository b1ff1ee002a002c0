use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// The Gram submatrix of the regressor set is numerically singular.
    #[error("degenerate design for node {node} on parent set {set:?}")]
    DegenerateDesign { node: usize, set: Vec<usize> },

    #[error("non-positive argument {value} to log in score evaluation")]
    NonPositiveRss { value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what} out of range: {value} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        limit: usize,
    },

    #[error("chain {chain} failed at iteration {iteration}: {source}")]
    Chain {
        chain: usize,
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
