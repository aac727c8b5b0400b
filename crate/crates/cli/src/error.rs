use serde::Serialize;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("numeric: {0}")]
    Numeric(#[from] jct_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            // parameter-level rejections from the core are configuration problems
            CliError::Numeric(
                jct_core::Error::InvalidParams(_) | jct_core::Error::MatrixAssumption(_),
            ) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        let kind = match self {
            CliError::Config(_) => "config",
            CliError::Numeric(_) if self.exit_code() == 2 => "config",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
        };
        serde_json::to_string(&ErrorRecord {
            kind,
            message: self.to_string(),
            exit_code: self.exit_code(),
        })
        .expect("error record serializes")
    }
}
