use std::fmt;

/// Failure of a CLI verb, grouped by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or inconsistent configuration (exit 2).
    Config(String),
    /// Unreadable or malformed data files, or unwritable outputs (exit 3).
    Data(String),
    /// Training diverged (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric abort: {m}"),
        }
    }
}

impl From<pikan::Error> for CliError {
    fn from(e: pikan::Error) -> Self {
        use pikan::Error as E;
        match e {
            E::NumericAbort { .. } | E::NonFiniteGradient { .. } | E::NonFinite { .. } | E::ZeroReference => {
                CliError::Numeric(e.to_string())
            }
            E::Data(_) | E::Io(_) | E::Serde(_) => CliError::Data(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
