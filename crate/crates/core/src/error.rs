use thiserror::Error;

/// Errors raised anywhere in the modelling pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("connectivity error: {0}")]
    Connectivity(String),

    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: usize },

    #[error("network has no inflow boundary condition")]
    MissingInflow,

    #[error("feature {index} ({name}) has zero variance")]
    DegenerateFeature { index: usize, name: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("underdetermined fit: column `{column}` is linearly dependent on the preceding columns")]
    RankDeficient { column: String },

    #[error("time grid is not uniform at sample {index}")]
    NonUniformGrid { index: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("junction {junction} outlet {outlet} is missing {what}")]
    MissingJunctionData {
        junction: usize,
        outlet: usize,
        what: &'static str,
    },

    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("version mismatch: expected {expected}, found {found}")]
    Version { expected: String, found: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of a numerical procedure (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_) | Error::Divergence(_) | Error::RankDeficient { .. }
        )
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Wraps a serde_json error, converting its line/column into a byte offset of `text`.
    pub(crate) fn json(text: &str, err: serde_json::Error) -> Self {
        let offset = byte_offset(text, err.line(), err.column());
        Error::Parse {
            offset,
            message: err.to_string(),
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
