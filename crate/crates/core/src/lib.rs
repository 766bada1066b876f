//! Environment contract, hierarchical batching, and the AMaze maze environment.
//!
//! Environments are pure: every operation is a function of a random key, a
//! state, an action and the static parameters the environment was built with.
//! Free parameters (the level) live inside the state and can be read and
//! overwritten through [`Upomdp`].

pub mod batch;
pub mod env;
pub mod error;
pub mod maze;
pub mod rng;
pub mod ued;
pub mod wrappers;

pub use batch::{BatchEnv, BatchObs, BatchShape, BatchState, BatchStep};
pub use env::{
    Environment, Extras, Info, ObsSpec, Observation, StepResult, Transition, Upomdp,
};
pub use error::EnvError;
pub use rng::Key;
pub use ued::{LevelDesigner, UedEnv};
