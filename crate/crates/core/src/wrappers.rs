//! Environment wrappers. Their state rides in the step extras.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::env::{Environment, Extras, Info, ObsSpec, StepResult, Transition, Upomdp};
use crate::error::EnvError;
use crate::rng::Key;

/// On episode end, starts a fresh episode from [`Environment::reset_state`].
/// The observation after a terminal step belongs to the new episode.
#[derive(Clone, Debug)]
pub struct AutoReset<E>(pub E);

impl<E: Environment> Environment for AutoReset<E> {
    type State = E::State;

    fn obs_spec(&self) -> ObsSpec {
        self.0.obs_spec()
    }
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
    fn max_episode_steps(&self) -> usize {
        self.0.max_episode_steps()
    }
    fn reset_state(&self, key: Key) -> Result<E::State, EnvError> {
        self.0.reset_state(key)
    }
    fn transition(&self, key: Key, state: &mut E::State, action: usize, extras: &mut Extras) -> Result<Transition, EnvError> {
        let t = self.0.transition(key.fold_in(0), state, action, extras)?;
        if t.done {
            *state = self.0.reset_state(key.fold_in(1))?;
        }
        Ok(t)
    }
    fn observe_into(&self, state: &E::State, tokens: &mut [u8], scalars: &mut [f32]) -> u8 {
        self.0.observe_into(state, tokens, scalars)
    }
}

impl<E: Upomdp> Upomdp for AutoReset<E> {
    type Level = E::Level;

    fn get_env_state(&self, state: &E::State) -> E::Level {
        self.0.get_env_state(state)
    }
    fn set_env_state(&self, level: &E::Level) -> Result<E::State, EnvError> {
        self.0.set_env_state(level)
    }
    fn sample_level(&self, key: Key) -> Result<E::Level, EnvError> {
        self.0.sample_level(key)
    }
    fn env_metrics(&self, level: &E::Level) -> BTreeMap<&'static str, f64> {
        self.0.env_metrics(level)
    }
}

const REPLAY_LEVEL: &str = "replay_level";

/// On episode end, restarts the same level. The level is kept in the extras
/// under `"replay_level"`.
#[derive(Clone, Debug)]
pub struct AutoReplay<E>(pub E);

impl<E: Upomdp> AutoReplay<E> {
    fn with_level(&self, level: E::Level) -> Result<StepResult<E::State>, EnvError> {
        let mut r = self.0.reset_to_level(&level)?;
        r.extras.insert(REPLAY_LEVEL, Arc::new(level));
        Ok(r)
    }
}

impl<E: Upomdp> Environment for AutoReplay<E> {
    type State = E::State;

    fn obs_spec(&self) -> ObsSpec {
        self.0.obs_spec()
    }
    fn num_actions(&self) -> usize {
        self.0.num_actions()
    }
    fn max_episode_steps(&self) -> usize {
        self.0.max_episode_steps()
    }
    fn reset_state(&self, key: Key) -> Result<E::State, EnvError> {
        self.0.reset_state(key)
    }
    fn reset(&self, key: Key) -> Result<StepResult<E::State>, EnvError> {
        self.with_level(self.0.sample_level(key)?)
    }
    fn transition(&self, key: Key, state: &mut E::State, action: usize, extras: &mut Extras) -> Result<Transition, EnvError> {
        let t = self.0.transition(key, state, action, extras)?;
        if t.done {
            let level = extras
                .get(REPLAY_LEVEL)
                .and_then(|v| v.downcast_ref::<E::Level>())
                .ok_or(EnvError::MissingExtra(REPLAY_LEVEL))?;
            *state = self.0.set_env_state(level)?;
        }
        Ok(t)
    }
    fn observe_into(&self, state: &E::State, tokens: &mut [u8], scalars: &mut [f32]) -> u8 {
        self.0.observe_into(state, tokens, scalars)
    }
}

impl<E: Upomdp> Upomdp for AutoReplay<E> {
    type Level = E::Level;

    fn get_env_state(&self, state: &E::State) -> E::Level {
        self.0.get_env_state(state)
    }
    fn set_env_state(&self, level: &E::Level) -> Result<E::State, EnvError> {
        self.0.set_env_state(level)
    }
    fn sample_level(&self, key: Key) -> Result<E::Level, EnvError> {
        self.0.sample_level(key)
    }
    fn env_metrics(&self, level: &E::Level) -> BTreeMap<&'static str, f64> {
        self.0.env_metrics(level)
    }
    fn reset_to_level(&self, level: &E::Level) -> Result<StepResult<E::State>, EnvError> {
        self.with_level(level.clone())
    }
}

/// Empty info map, for environments that report nothing.
pub fn no_info() -> Info {
    Info::new()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::{AMaze, Cell, Direction, MazeLevel, MazeAction, StaticParams};

    fn one_step_level() -> (AMaze, MazeLevel) {
        let p = StaticParams { height: 5, width: 5, wall_budget: 0, ..StaticParams::default() };
        let l = MazeLevel::empty_room(5, 5, Cell::new(1, 1), Direction::East, Cell::new(1, 2));
        (AMaze::new(p).unwrap(), l)
    }

    #[test]
    fn replay_restarts_same_level() {
        let (e, l) = one_step_level();
        let w = AutoReplay(e);
        let r = w.reset_to_level(&l).unwrap();
        let r = w.step(Key::new(0), &r.state, MazeAction::Forward as usize, r.extras).unwrap();
        assert!(r.done && r.reward > 0.0);
        assert_eq!(r.state.agent_pos, Cell::new(1, 1));
        assert_eq!(r.state.time, 0);
        assert_eq!(w.get_env_state(&r.state), l);
    }

    #[test]
    fn replay_without_extras_fails_on_done() {
        let (e, l) = one_step_level();
        let w = AutoReplay(e);
        let s = w.set_env_state(&l).unwrap();
        assert_eq!(
            w.step(Key::new(0), &s, MazeAction::Forward as usize, Extras::new()).unwrap_err(),
            EnvError::MissingExtra("replay_level")
        );
    }

    #[test]
    fn reset_samples_new_level() {
        let (e, l) = one_step_level();
        let w = AutoReset(e);
        let s = w.set_env_state(&l).unwrap();
        let r = w.step(Key::new(4), &s, MazeAction::Forward as usize, Extras::new()).unwrap();
        assert!(r.done);
        assert_eq!(r.state.time, 0);
        assert!(!r.state.terminal);
    }
}
