use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file. `line` is 1-based; `column` is the 1-based field index.
    #[error("{}", format_parse(.path, *.line, *.column, .message))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    /// A value violates an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("weights sum to zero; the positive ratio is undefined")]
    ZeroWeightSum,

    #[error(
        "optimization collapsed: every weight projected to 0 (lambda = {lambda}, learning rate = {learning_rate}); \
         try a larger lambda or a smaller learning rate"
    )]
    DegenerateSolution { lambda: f64, learning_rate: f64 },

    #[error("every replication count rounds to 0 at scale constant {scale}; use a larger constant")]
    AllZeroCounts { scale: f64 },

    #[error("target unreachable: {0}")]
    Unreachable(String),

    /// Two inputs disagree (ids, shapes, checksums).
    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
}

fn format_parse(path: &Option<PathBuf>, line: usize, column: Option<usize>, message: &str) -> String {
    let loc = match column {
        Some(c) => format!("line {line}, column {c}"),
        None => format!("line {line}"),
    };
    match path {
        Some(p) => format!("{}: {loc}: {message}", p.display()),
        None => format!("{loc}: {message}"),
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse { path: None, line, column, message: message.into() }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    /// Attach a file path to a parse error that was raised without one.
    pub(crate) fn with_path(self, p: impl Into<PathBuf>) -> Self {
        match self {
            Error::Parse { path: None, line, column, message } => {
                Error::Parse { path: Some(p.into()), line, column, message }
            }
            other => other,
        }
    }

    /// Process exit code for the command-line tool.
    ///
    /// 2 input/parse, 3 solver or degenerate output, 4 consistency.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } | Error::InvalidInput(_) => 2,
            Error::ZeroWeightSum
            | Error::DegenerateSolution { .. }
            | Error::AllZeroCounts { .. }
            | Error::Unreachable(_)
            | Error::Divergence { .. } => 3,
            Error::Consistency(_) => 4,
        }
    }
}
