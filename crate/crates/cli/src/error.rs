use gpreg::GpError;
use gpreg_experiments::ExperimentError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        json!({
            "error": {
                "kind": self.kind(),
                "exit_code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }

    pub fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            // bad inputs rather than numerical trouble
            GpError::Domain { .. }
            | GpError::Construction(_)
            | GpError::Capability { .. }
            | GpError::UnsupportedKernel { .. }
            | GpError::Contract(_)
            | GpError::LengthMismatch { .. } => CliError::Config(e.to_string()),
            GpError::Numerical { .. } | GpError::Selection(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(m) => CliError::Config(m),
            ExperimentError::Numerical(g) => g.into(),
            ExperimentError::FailureRate { .. } => CliError::Numerical(e.to_string()),
            ExperimentError::Pool(m) => CliError::Io(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
