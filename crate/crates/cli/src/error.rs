use thiserror::Error;

/// Exit status for a run whose checks did not all pass.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("bad override {0}")]
    Override(String),
    #[error("{module}: {message}")]
    Invalid { module: &'static str, message: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("numerical abort: {0}")]
    Numerical(hartree_core::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<hartree_core::Error> for RunError {
    fn from(e: hartree_core::Error) -> Self {
        RunError::Numerical(e)
    }
}
