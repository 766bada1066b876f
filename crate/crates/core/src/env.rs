//! The environment contract.
//!
//! Observations are token grids: a fixed number of categorical tokens, one
//! categorical auxiliary feature (e.g. heading or design phase) and a few
//! real-valued scalars. Both the student maze and the teacher design MDP fit
//! this shape, which lets one policy model serve either role.

use std::any::Any;
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::EnvError;
use crate::rng::Key;

/// Environment-reported per-step scalars.
pub type Info = BTreeMap<&'static str, f32>;

/// Wrapper-owned state threaded through steps. Core environments pass it
/// through untouched.
pub type Extras = BTreeMap<&'static str, Arc<dyn Any + Send + Sync>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ObsSpec {
    pub n_tokens: usize,
    pub n_codes: usize,
    pub n_aux: usize,
    pub n_scalars: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub tokens: Vec<u8>,
    pub aux: u8,
    pub scalars: Vec<f32>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Transition {
    pub reward: f32,
    pub done: bool,
    pub info: Info,
}

#[derive(Clone)]
pub struct StepResult<S> {
    pub observation: Observation,
    pub state: S,
    pub reward: f32,
    pub done: bool,
    pub info: Info,
    pub extras: Extras,
}

impl<S: std::fmt::Debug> std::fmt::Debug for StepResult<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StepResult")
            .field("observation", &self.observation)
            .field("state", &self.state)
            .field("reward", &self.reward)
            .field("done", &self.done)
            .field("info", &self.info)
            .field("extras", &self.extras.keys().collect::<Vec<_>>())
            .finish()
    }
}

pub trait Environment: Send + Sync {
    type State: Clone + Send + Sync + 'static;

    fn obs_spec(&self) -> ObsSpec;
    fn num_actions(&self) -> usize;
    fn max_episode_steps(&self) -> usize;

    fn reset_state(&self, key: Key) -> Result<Self::State, EnvError>;

    /// Advances `state` in place. Implementations that are not wrappers must
    /// leave `extras` untouched.
    fn transition(
        &self,
        key: Key,
        state: &mut Self::State,
        action: usize,
        extras: &mut Extras,
    ) -> Result<Transition, EnvError>;

    /// Writes the observation tokens and scalars of `state`, returns the aux code.
    fn observe_into(&self, state: &Self::State, tokens: &mut [u8], scalars: &mut [f32]) -> u8;

    fn observe(&self, state: &Self::State) -> Observation {
        let spec = self.obs_spec();
        let mut tokens = vec![0u8; spec.n_tokens];
        let mut scalars = vec![0f32; spec.n_scalars];
        let aux = self.observe_into(state, &mut tokens, &mut scalars);
        Observation { tokens, aux, scalars }
    }

    fn reset(&self, key: Key) -> Result<StepResult<Self::State>, EnvError> {
        let state = self.reset_state(key)?;
        Ok(StepResult {
            observation: self.observe(&state),
            state,
            reward: 0.0,
            done: false,
            info: Info::new(),
            extras: Extras::new(),
        })
    }

    fn step(
        &self,
        key: Key,
        state: &Self::State,
        action: usize,
        mut extras: Extras,
    ) -> Result<StepResult<Self::State>, EnvError> {
        let mut next = state.clone();
        let t = self.transition(key, &mut next, action, &mut extras)?;
        Ok(StepResult {
            observation: self.observe(&next),
            state: next,
            reward: t.reward,
            done: t.done,
            info: t.info,
            extras,
        })
    }
}

/// An environment whose free parameters (the level) are explicit.
pub trait Upomdp: Environment {
    type Level: Clone + Send + Sync + 'static;

    /// The level the state was instantiated from.
    fn get_env_state(&self, state: &Self::State) -> Self::Level;

    /// A fresh episode on `level`; time is zero and the state is non-terminal.
    fn set_env_state(&self, level: &Self::Level) -> Result<Self::State, EnvError>;

    fn sample_level(&self, key: Key) -> Result<Self::Level, EnvError>;

    fn env_metrics(&self, level: &Self::Level) -> BTreeMap<&'static str, f64>;

    fn reset_to_level(&self, level: &Self::Level) -> Result<StepResult<Self::State>, EnvError> {
        let state = self.set_env_state(level)?;
        Ok(StepResult {
            observation: self.observe(&state),
            state,
            reward: 0.0,
            done: false,
            info: Info::new(),
            extras: Extras::new(),
        })
    }
}
