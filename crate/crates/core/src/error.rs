use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("infeasible instance after {inserted} repair insertions ({targets} targets, {sensors} requested sensors)")]
    Infeasible {
        targets: usize,
        sensors: usize,
        inserted: usize,
    },

    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("non-finite gradient in parameter block `{0}`")]
    NonFiniteGradient(String),

    #[error("non-finite importance ratio at frame {0}")]
    NonFiniteRatio(usize),

    #[error("graph too large for exhaustive enumeration: {nodes} nodes (limit {limit})")]
    GraphTooLarge { nodes: usize, limit: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("degenerate scenario: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
