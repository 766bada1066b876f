use thiserror::Error;
use ued_agents::AgentError;
use ued_core::EnvError;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot sample from an empty level buffer")]
    EmptyBuffer,
    #[error("empty trajectory segment")]
    EmptySegment,
    #[error("shard {shard} diverged from shard 0 by {max_abs_diff:e}")]
    ShardDivergence { shard: usize, max_abs_diff: f64 },
    #[error("shard {shard} failed: {msg}")]
    Shard { shard: usize, msg: String },
    #[error("snapshot does not match runner: {0}")]
    Snapshot(String),
}
