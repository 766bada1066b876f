//! PPO agents over a small recurrent policy.
//!
//! The network is written out by hand (forward and backward) over flat
//! parameter vectors, so optimizer state, gradient averaging and
//! checkpointing all operate on plain slices.

pub mod agent;
pub mod checkpoint;
pub mod error;
pub mod gae;
pub mod model;
pub mod network;
pub mod ppo;
pub mod rollout;
pub mod trajectory;

pub use agent::{AgentPop, AgentState, PpoAgent};
pub use checkpoint::{Checkpoint, NamedTensor};
pub use error::AgentError;
pub use gae::compute_gae;
pub use model::{Layout, ModelConfig, ModelSpec, Params, Slot};
pub use network::{ActionMode, RecurrentPolicy, SeqInput};
pub use ppo::{AdamState, GradReducer, LocalReducer, PpoConfig, UpdateBatch, UpdateStats};
pub use rollout::{rollout, run_episodes, Carry, EpisodeRecord, RolloutOutput};
pub use trajectory::TrajectoryBatch;

/// Scalar type the network can be instantiated with (`f32` for training,
/// `f64` for gradient checks).
pub trait Real: ndarray::NdFloat + num_traits::Float + num_traits::FromPrimitive {}

impl<T: ndarray::NdFloat + num_traits::Float + num_traits::FromPrimitive> Real for T {}

#[inline]
pub(crate) fn cast<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("finite constant")
}
