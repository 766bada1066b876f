use std::path::PathBuf;

use thiserror::Error;
use ued_agents::AgentError;
use ued_core::EnvError;
use ued_runners::RunnerError;

use crate::registry::RegistryError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("{}: {msg}", path.display())]
    File { path: PathBuf, msg: String },
    #[error(transparent)]
    Runner(#[from] RunnerError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("checkpoint {}: {msg}", path.display())]
    Checkpoint { path: PathBuf, msg: String },
    #[error("training aborted at iteration {iteration}: {source}; crash checkpoint at {}", crash.display())]
    Crashed {
        iteration: u64,
        crash: PathBuf,
        #[source]
        source: RunnerError,
    },
}

impl ExperimentError {
    pub fn file(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        ExperimentError::File { path: path.into(), msg: msg.to_string() }
    }

    /// 2 for anything the user can fix in the invocation, 3 for faults.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) | ExperimentError::Registry(_) | ExperimentError::File { .. } => 2,
            ExperimentError::Runner(RunnerError::Config(_))
            | ExperimentError::Runner(RunnerError::Env(EnvError::InvalidParams(_)))
            | ExperimentError::Agent(AgentError::Config(_))
            | ExperimentError::Env(EnvError::InvalidParams(_)) => 2,
            _ => 3,
        }
    }
}
