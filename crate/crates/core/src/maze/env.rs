use std::collections::BTreeMap;
use std::sync::Arc;

use super::generate::sample_random_level;
use super::level::{Cell, Direction, MazeLevel};
use super::metrics::env_metrics;
use super::observe::{observe_codes, observe_padded, Tile, TileGrid, TILE_PAD};
use super::params::StaticParams;
use crate::env::{Environment, Extras, Info, ObsSpec, Transition, Upomdp};
use crate::error::EnvError;
use crate::rng::Key;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MazeAction {
    TurnLeft = 0,
    TurnRight = 1,
    Forward = 2,
}

impl MazeAction {
    pub const COUNT: usize = 3;

    pub fn from_index(i: usize) -> Option<MazeAction> {
        match i {
            0 => Some(MazeAction::TurnLeft),
            1 => Some(MazeAction::TurnRight),
            2 => Some(MazeAction::Forward),
            _ => None,
        }
    }
}

/// Student environment state. The level is shared; only the pose and clock
/// change during an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct MazeState {
    pub level: Arc<MazeLevel>,
    /// Derived from `level`.
    pub tiles: Arc<TileGrid>,
    pub agent_pos: Cell,
    pub agent_dir: Direction,
    pub time: usize,
    pub terminal: bool,
}

impl MazeState {
    pub fn new(level: Arc<MazeLevel>) -> Self {
        MazeState {
            agent_pos: level.agent_pos,
            agent_dir: level.agent_dir,
            tiles: Arc::new(TileGrid::new(&level)),
            level,
            time: 0,
            terminal: false,
        }
    }
}

/// Applies one action. Moves into walls leave the agent in place.
pub fn transition(state: &mut MazeState, action: MazeAction) {
    match action {
        MazeAction::TurnLeft => state.agent_dir = state.agent_dir.turn_left(),
        MazeAction::TurnRight => state.agent_dir = state.agent_dir.turn_right(),
        MazeAction::Forward => {
            let (dr, dc) = state.agent_dir.delta();
            let r = state.agent_pos.row as isize + dr;
            let c = state.agent_pos.col as isize + dc;
            let level = &state.level;
            if r >= 0 && c >= 0 && (r as usize) < level.height && (c as usize) < level.width {
                let target = Cell::new(r as usize, c as usize);
                if !level.is_wall(target) {
                    state.agent_pos = target;
                }
            }
        }
    }
    state.time += 1;
}

/// `1 - 0.9 * t / T` on reaching the goal, else zero.
pub fn compute_reward(state: &MazeState, max_episode_steps: usize) -> f32 {
    if state.agent_pos == state.level.goal_pos {
        1.0 - 0.9 * (state.time as f32 / max_episode_steps as f32)
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct AMaze {
    params: StaticParams,
}

impl AMaze {
    pub fn new(params: StaticParams) -> Result<Self, EnvError> {
        params.validate()?;
        Ok(AMaze { params })
    }

    pub fn params(&self) -> &StaticParams {
        &self.params
    }

    fn check_dims(&self, level: &MazeLevel) -> Result<(), EnvError> {
        if level.height != self.params.height || level.width != self.params.width {
            return Err(EnvError::InvalidLevel(format!(
                "level is {}x{}, environment expects {}x{}",
                level.height, level.width, self.params.height, self.params.width
            )));
        }
        Ok(())
    }
}

impl Environment for AMaze {
    type State = MazeState;

    fn obs_spec(&self) -> ObsSpec {
        let v = self.params.agent_view_size;
        ObsSpec { n_tokens: v * v, n_codes: Tile::COUNT, n_aux: 4, n_scalars: 0 }
    }

    fn num_actions(&self) -> usize {
        MazeAction::COUNT
    }

    fn max_episode_steps(&self) -> usize {
        self.params.max_episode_steps
    }

    fn reset_state(&self, key: Key) -> Result<MazeState, EnvError> {
        Ok(MazeState::new(Arc::new(sample_random_level(key, &self.params)?)))
    }

    fn transition(
        &self,
        _key: Key,
        state: &mut MazeState,
        action: usize,
        _extras: &mut Extras,
    ) -> Result<Transition, EnvError> {
        if state.terminal {
            return Err(EnvError::TerminalStep);
        }
        let action = MazeAction::from_index(action)
            .ok_or(EnvError::InvalidAction { action, n: MazeAction::COUNT })?;
        transition(state, action);
        let solved = state.agent_pos == state.level.goal_pos;
        let reward = compute_reward(state, self.params.max_episode_steps);
        let done = solved || state.time >= self.params.max_episode_steps;
        state.terminal = done;
        let mut info = Info::new();
        if done {
            info.insert("solved", if solved { 1.0 } else { 0.0 });
            info.insert("episode_length", state.time as f32);
        }
        Ok(Transition { reward, done, info })
    }

    fn observe_into(&self, state: &MazeState, tokens: &mut [u8], _scalars: &mut [f32]) -> u8 {
        match self.params.agent_view_size {
            v if v <= TILE_PAD + 1 => observe_padded(state, v, self.params.see_through_walls, tokens),
            _ => observe_codes(
                &state.level,
                state.agent_pos,
                state.agent_dir,
                self.params.agent_view_size,
                self.params.see_through_walls,
                tokens,
            ),
        }
        state.agent_dir.index() as u8
    }
}

impl Upomdp for AMaze {
    type Level = MazeLevel;

    fn get_env_state(&self, state: &MazeState) -> MazeLevel {
        (*state.level).clone()
    }

    fn set_env_state(&self, level: &MazeLevel) -> Result<MazeState, EnvError> {
        self.check_dims(level)?;
        level.validate()?;
        Ok(MazeState::new(Arc::new(level.clone())))
    }

    fn sample_level(&self, key: Key) -> Result<MazeLevel, EnvError> {
        sample_random_level(key, &self.params)
    }

    fn env_metrics(&self, level: &MazeLevel) -> BTreeMap<&'static str, f64> {
        env_metrics(level).to_map()
    }
}
