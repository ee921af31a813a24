use std::path::PathBuf;

use crate::config::ConfigError;

#[derive(Debug)]
pub enum HarnessError {
    Config(ConfigError),
    Core(gnlab_core::Error),
    Io { path: PathBuf, source: std::io::Error },
    /// Another command holds the output directory's lock.
    Busy(PathBuf),
}

pub type HarnessResult<T> = Result<T, HarnessError>;

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        use gnlab_core::Error as E;
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Core(e) => match e {
                E::Parameter(_) | E::Dimension { .. } | E::Index { .. } | E::EmptyInput(_) | E::Format { .. } => 2,
                E::Calibration { .. } => 4,
                E::Io(_) => 1,
                _ => 3,
            },
            HarnessError::Io { .. } | HarnessError::Busy(_) => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

impl std::fmt::Display for HarnessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HarnessError::Config(e) => write!(f, "{e}"),
            HarnessError::Core(e) => write!(f, "{e}"),
            HarnessError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            HarnessError::Busy(p) => write!(f, "output directory is locked by another run ({})", p.display()),
        }
    }
}

impl std::error::Error for HarnessError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            HarnessError::Config(e) => Some(e),
            HarnessError::Core(e) => Some(e),
            HarnessError::Io { source, .. } => Some(source),
            HarnessError::Busy(_) => None,
        }
    }
}

impl From<ConfigError> for HarnessError {
    fn from(e: ConfigError) -> Self {
        HarnessError::Config(e)
    }
}

impl From<gnlab_core::Error> for HarnessError {
    fn from(e: gnlab_core::Error) -> Self {
        HarnessError::Core(e)
    }
}
