//! Curriculum runners over the maze environment.
//!
//! Each call to `iterate` performs one rollout-and-update cycle of the chosen
//! curriculum and returns a metrics record. Student-only curricula can be
//! sharded: shards run in threads with private level buffers and meet only
//! to average gradients.

pub mod buffer;
pub mod comm;
pub mod config;
pub mod error;
pub mod mutator;
pub mod paired;
pub mod record;
pub mod runner;
pub mod score;
pub mod student;

pub use buffer::{sample_decision, Branch, BufferEntry, Candidate, LevelBuffer, PlrConfig, Prioritization, ScoreFn};
pub use comm::{ShardComm, ShardHandle};
pub use config::{AccelConfig, MutationSelection, PairedConfig, RunnerKind, RunnerSpec};
pub use error::RunnerError;
pub use mutator::{IdentityMutator, LevelMutator, MazeMutator};
pub use paired::PairedRunner;
pub use record::IterationRecord;
pub use runner::{Runner, RunnerSnapshot};
pub use score::{population_regret, score_maxmc, score_pvl};
pub use student::{IterMode, ShardStats, StudentRunner};
