use std::path::PathBuf;

use thiserror::Error;

/// Every failure the pipeline can surface.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("mesh has no usable triangles")]
    EmptyMesh,

    #[error("{path}:{line}: point record has no normal")]
    MissingNormals { path: PathBuf, line: usize },

    #[error("rejection sampling stalled: {accepted} of {trials} trials accepted")]
    SamplingStalled { accepted: usize, trials: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("infeasible cover{}: {} required rows have no available candidate", part_suffix(.part), .rows.len())]
    Infeasible { rows: Vec<usize>, part: Option<usize> },

    #[error("instance too large for brute force: {n} candidates (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("bad partition labels: {0}")]
    BadLabels(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn part_suffix(part: &Option<usize>) -> String {
    match part {
        Some(p) => format!(" in part {p}"),
        None => String::new(),
    }
}

impl Error {
    /// Stable machine-readable category name, used for exit statuses and reports.
    pub fn category(&self) -> &'static str {
        match self {
            Error::DegenerateInput(_) => "degenerate_input",
            Error::Parse { .. } => "parse_error",
            Error::EmptyMesh => "empty_mesh",
            Error::MissingNormals { .. } => "missing_normals",
            Error::SamplingStalled { .. } => "sampling_stalled",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Infeasible { .. } => "infeasible",
            Error::TooLarge { .. } => "too_large",
            Error::BadLabels(_) => "bad_labels",
            Error::Io { .. } => "io_error",
        }
    }

    /// Process exit code for this category. Zero is reserved for success.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Parse { .. } | Error::MissingNormals { .. } | Error::BadLabels(_) => 3,
            Error::InvalidParameter(_) | Error::IndexOutOfRange { .. } | Error::TooLarge { .. } => 4,
            Error::DegenerateInput(_) | Error::EmptyMesh => 5,
            Error::SamplingStalled { .. } => 6,
            Error::Infeasible { .. } => 7,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
