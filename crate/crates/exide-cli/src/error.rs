//! CLI failures sorted into the three non-zero exit codes: 1 for bad
//! invocations, 2 for processing failures, 3 for filesystem problems.

use std::fmt;

use exide_core::corpus::CorpusError;
use exide_core::graph::GraphError;
use exide_core::llm::LlmError;
use exide_core::metrics::MetricsError;
use exide_core::pipeline::PipelineError;
use exide_core::prompt::PromptError;

#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong: conflicting flags, unknown names.
    Config(String),
    /// Inputs were readable but processing them failed.
    Run(String),
    /// A file or directory could not be read or written.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Run(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Run(msg) | CliError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(err: CorpusError) -> CliError {
        match err {
            CorpusError::Io { .. } => CliError::Io(err.to_string()),
            _ => CliError::Run(err.to_string()),
        }
    }
}

impl From<PromptError> for CliError {
    fn from(err: PromptError) -> CliError {
        match err {
            PromptError::Io { .. } => CliError::Io(err.to_string()),
            _ => CliError::Run(err.to_string()),
        }
    }
}

impl From<LlmError> for CliError {
    fn from(err: LlmError) -> CliError {
        match err {
            LlmError::Io { .. } => CliError::Io(err.to_string()),
            _ => CliError::Run(err.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(err: PipelineError) -> CliError {
        CliError::Run(err.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(err: MetricsError) -> CliError {
        CliError::Run(err.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(err: GraphError) -> CliError {
        CliError::Run(err.to_string())
    }
}
