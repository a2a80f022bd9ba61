use std::path::{Path, PathBuf};

/// Errors raised by the harness. Each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("threat model violation: {0}")]
    ThreatModel(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("missing artifact: {0}")]
    Missing(PathBuf),
    #[error(transparent)]
    Core(#[from] graphadv_core::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::ThreatModel(_) | HarnessError::Core(graphadv_core::Error::ThreatModelViolation(_)) => 3,
            _ => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        HarnessError::Format { path: path.to_path_buf(), msg: msg.into() }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => HarnessError::Missing(path.to_path_buf()),
        _ => HarnessError::io(path, e),
    })
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => HarnessError::Missing(path.to_path_buf()),
        _ => HarnessError::io(path, e),
    })
}

/// Writes `contents`, creating parent directories.
pub(crate) fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}
