use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Operand shapes do not conform.
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    /// A configuration or type invariant was violated.
    #[error("invalid {field}: {detail}")]
    Invalid { field: String, detail: String },

    /// Malformed input file contents.
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: String,
        line: u64,
        detail: String,
    },

    /// Pipeline-level data problem (no overlap, all-missing column, too few samples...).
    #[error("{stage}: {detail}")]
    Data { stage: &'static str, detail: String },

    #[error("non-finite value {detail}")]
    NonFinite { detail: String },

    #[error("training diverged: non-finite loss in {phase} at epoch {epoch}, batch {batch}")]
    Divergence {
        phase: String,
        epoch: usize,
        batch: usize,
    },

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(String),

    /// An error raised inside a named pipeline stage.
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn data(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Data {
            stage,
            detail: detail.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags the error with the pipeline stage it came from, unless it already names one.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Data { .. } | Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Process exit code: 1 for validation errors, 2 for runtime or numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Shape { .. } | Error::Invalid { .. } => 1,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
