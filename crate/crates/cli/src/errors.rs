//! Error classification for exit codes: configuration problems exit 2,
//! data problems exit 3, backend problems exit 4.

use bias_refinery_core::corpus::CorpusError;
use bias_refinery_core::datasets::DatasetError;
use bias_refinery_core::evalkit::EvalError;
use bias_refinery_core::lexicon::LexiconError;
use bias_refinery_core::llm::LlmError;
use bias_refinery_core::scoring::ScoreError;
use bias_refinery_core::wsd::{FilterError, WsdError};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_BACKEND: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Backend(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Backend(_) => EXIT_BACKEND,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Backend(_) => "backend",
        }
    }

    pub fn config(message: impl std::fmt::Display) -> Self {
        CliError::Config(message.to_string())
    }

    pub fn data(message: impl std::fmt::Display) -> Self {
        CliError::Data(message.to_string())
    }

    pub fn backend(message: impl std::fmt::Display) -> Self {
        CliError::Backend(message.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Data(m) | CliError::Backend(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::MissingApiKey | LlmError::MissingEndpoint | LlmError::InvalidRequest(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl From<WsdError> for CliError {
    fn from(e: WsdError) -> Self {
        match e {
            WsdError::Llm(inner) => CliError::from(inner),
            WsdError::Backend { .. } => CliError::Backend(e.to_string()),
            WsdError::Model(inner) => CliError::Data(inner.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        CliError::Backend(e.to_string())
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::Llm(inner) => CliError::from(inner),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<bias_refinery_core::baseline::ModelError> for CliError {
    fn from(e: bias_refinery_core::baseline::ModelError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Tag std I/O failures with the path.
pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}
