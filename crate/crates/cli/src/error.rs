use std::fmt;

/// A failure reported as a single machine-parseable line plus an exit code.
#[derive(Debug)]
pub struct CliError {
    pub tag: &'static str,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            tag: "E_INPUT",
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            tag: "E_CONFIG",
            message: message.into(),
        }
    }

    pub fn window(message: impl Into<String>) -> Self {
        CliError {
            tag: "E_WINDOW",
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.tag {
            "E_CONFIG" => 3,
            "E_NUMERIC" => 4,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line = self.message.replace(['\n', '\r'], " ");
        write!(f, "error[{}]: {}", self.tag, one_line)
    }
}

impl std::error::Error for CliError {}

impl From<eqnn::Error> for CliError {
    fn from(e: eqnn::Error) -> Self {
        use eqnn::Error as E;
        let tag = match &e {
            E::Io { .. }
            | E::Format(_)
            | E::Malformed { .. }
            | E::Csv(_)
            | E::Json(_)
            | E::TooShort { .. } => "E_INPUT",
            E::Version { .. } => "E_VERSION",
            E::Config(_) | E::Shape { .. } => "E_CONFIG",
            E::Domain(_) | E::Degenerate(_) | E::Evaluation { .. } => "E_NUMERIC",
        };
        CliError {
            tag,
            message: e.to_string(),
        }
    }
}

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}
