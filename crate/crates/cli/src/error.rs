use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    UnitViolation {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("{message}")]
    Constraint { message: String },

    #[error(transparent)]
    Core(#[from] nemsamp_core::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    exit_code: i32,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Syntax { .. } => "syntax-error",
            CliError::UnknownKey { .. } => "unknown-key",
            CliError::UnitViolation { .. } => "unit-violation",
            CliError::Constraint { .. } => "constraint-violation",
            CliError::Core(e) if e.is_solver() => "solver-error",
            CliError::Core(_) => "config-error",
            CliError::Io { .. } => "io-error",
        }
    }

    /// 1 for configuration problems, 2 for solver failures, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_solver() => 2,
            CliError::Io { .. } => 3,
            _ => 1,
        }
    }

    fn line(&self) -> Option<usize> {
        match self {
            CliError::Syntax { line, .. } | CliError::UnknownKey { line, .. } if *line > 0 => {
                Some(*line)
            }
            CliError::UnitViolation { line, .. } => *line,
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&ErrorReport {
            error: self.kind(),
            message: self.to_string(),
            line: self.line(),
            exit_code: self.exit_code(),
        })
        .expect("error report serializes")
    }

    pub fn io(path: impl std::fmt::Display, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            message: err.to_string(),
        }
    }
}
