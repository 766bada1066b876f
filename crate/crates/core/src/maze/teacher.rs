//! The teacher's design MDP.
//!
//! A design episode places `wall_budget` walls, then the goal, then the agent,
//! one cell per step. Actions index interior cells in row-major order.
//! Placements that would break level invariants are resolved by fixed rules
//! instead of masking, so the action space never changes size.

use super::level::{Cell, Direction, MazeLevel};
use super::params::StaticParams;
use crate::env::{Environment, Extras, ObsSpec, Observation, Transition};
use crate::error::EnvError;
use crate::rng::Key;
use crate::ued::LevelDesigner;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DesignPhase {
    PlacingWalls = 0,
    PlacingGoal = 1,
    PlacingAgent = 2,
    Done = 3,
}

impl DesignPhase {
    pub fn from_index(i: u8) -> Option<DesignPhase> {
        match i {
            0 => Some(DesignPhase::PlacingWalls),
            1 => Some(DesignPhase::PlacingGoal),
            2 => Some(DesignPhase::PlacingAgent),
            3 => Some(DesignPhase::Done),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TeacherState {
    pub height: usize,
    pub width: usize,
    /// Row-major wall grid including the border.
    pub walls: Vec<bool>,
    /// Wall-placement steps taken so far.
    pub n_placed: usize,
    pub phase: DesignPhase,
    pub goal_pos: Option<Cell>,
    pub agent_pos: Option<Cell>,
    pub agent_dir: Direction,
}

impl TeacherState {
    pub fn new(params: &StaticParams) -> Self {
        let blank = MazeLevel::empty_room(params.height, params.width, Cell::new(1, 1), Direction::North, Cell::new(1, 1));
        TeacherState {
            height: params.height,
            width: params.width,
            walls: blank.walls,
            n_placed: 0,
            phase: if params.wall_budget == 0 { DesignPhase::PlacingGoal } else { DesignPhase::PlacingWalls },
            goal_pos: None,
            agent_pos: None,
            agent_dir: Direction::North,
        }
    }

    fn interior_cell(&self, action: usize) -> Cell {
        let iw = self.width - 2;
        Cell::new(1 + action / iw, 1 + action % iw)
    }

    fn idx(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    /// The designed level, once the design episode has finished.
    pub fn to_level(&self) -> Result<MazeLevel, EnvError> {
        match (self.phase, self.goal_pos, self.agent_pos) {
            (DesignPhase::Done, Some(goal_pos), Some(agent_pos)) => Ok(MazeLevel {
                height: self.height,
                width: self.width,
                walls: self.walls.clone(),
                agent_pos,
                agent_dir: self.agent_dir,
                goal_pos,
            }),
            _ => Err(EnvError::IncompleteDesign),
        }
    }
}

/// One design decision. `key` only determines the agent's heading when the
/// agent is placed.
pub fn teacher_step(
    key: Key,
    state: &mut TeacherState,
    action: usize,
    params: &StaticParams,
) -> Result<(), EnvError> {
    let n_actions = params.interior_cells();
    if action >= n_actions {
        return Err(EnvError::InvalidAction { action, n: n_actions });
    }
    let cell = state.interior_cell(action);
    let i = state.idx(cell);
    match state.phase {
        DesignPhase::PlacingWalls => {
            state.walls[i] = true;
            state.n_placed += 1;
            if state.n_placed >= params.wall_budget {
                state.phase = DesignPhase::PlacingGoal;
            }
        }
        DesignPhase::PlacingGoal => {
            state.walls[i] = false;
            state.goal_pos = Some(cell);
            state.phase = DesignPhase::PlacingAgent;
        }
        DesignPhase::PlacingAgent => {
            let goal = state.goal_pos;
            let free = |c: usize| {
                let cell = state.interior_cell(c);
                !state.walls[state.idx(cell)] && Some(cell) != goal
            };
            // first free cell at or after the chosen one in row-major order
            let chosen = (0..n_actions)
                .map(|off| (action + off) % n_actions)
                .find(|&c| free(c))
                .expect("wall budget leaves at least one free cell beside the goal");
            state.agent_pos = Some(state.interior_cell(chosen));
            state.agent_dir = Direction::from_index((key.uniform() * 4.0) as usize);
            state.phase = DesignPhase::Done;
        }
        DesignPhase::Done => return Err(EnvError::TerminalStep),
    }
    Ok(())
}

/// Full-grid view (0 empty, 1 wall, 2 goal, 3 agent), phase as the aux code,
/// and the fraction of the wall budget used as the only scalar.
fn teacher_observe_into(state: &TeacherState, params: &StaticParams, tokens: &mut [u8], scalars: &mut [f32]) -> u8 {
    for (t, &w) in tokens.iter_mut().zip(&state.walls) {
        *t = w as u8;
    }
    if let Some(g) = state.goal_pos {
        tokens[state.idx(g)] = 2;
    }
    if let Some(a) = state.agent_pos {
        tokens[state.idx(a)] = 3;
    }
    scalars[0] = if params.wall_budget == 0 { 0.0 } else { state.n_placed as f32 / params.wall_budget as f32 };
    state.phase as u8
}

/// Inverse of the teacher observation encoding (heading is not observed).
pub fn decode_teacher_observation(obs: &Observation, params: &StaticParams) -> Option<TeacherState> {
    let mut state = TeacherState::new(params);
    if obs.tokens.len() != state.walls.len() {
        return None;
    }
    for (i, &t) in obs.tokens.iter().enumerate() {
        let cell = Cell::new(i / state.width, i % state.width);
        match t {
            0 => state.walls[i] = false,
            1 => state.walls[i] = true,
            2 => {
                state.walls[i] = false;
                state.goal_pos = Some(cell);
            }
            3 => {
                state.walls[i] = false;
                state.agent_pos = Some(cell);
            }
            _ => return None,
        }
    }
    state.phase = DesignPhase::from_index(obs.aux)?;
    state.n_placed = (obs.scalars.first()? * params.wall_budget as f32).round() as usize;
    Some(state)
}

/// The design MDP as an environment. Rewards are always zero; runners assign
/// the teacher's payoff at the final design step.
#[derive(Clone, Debug)]
pub struct MazeDesigner {
    params: StaticParams,
}

impl MazeDesigner {
    pub fn new(params: StaticParams) -> Result<Self, EnvError> {
        params.validate()?;
        Ok(MazeDesigner { params })
    }

    pub fn params(&self) -> &StaticParams {
        &self.params
    }
}

impl Environment for MazeDesigner {
    type State = TeacherState;

    fn obs_spec(&self) -> ObsSpec {
        ObsSpec { n_tokens: self.params.height * self.params.width, n_codes: 4, n_aux: 4, n_scalars: 1 }
    }

    fn num_actions(&self) -> usize {
        self.params.interior_cells()
    }

    fn max_episode_steps(&self) -> usize {
        self.params.wall_budget + 2
    }

    fn reset_state(&self, _key: Key) -> Result<TeacherState, EnvError> {
        Ok(TeacherState::new(&self.params))
    }

    fn transition(
        &self,
        key: Key,
        state: &mut TeacherState,
        action: usize,
        _extras: &mut Extras,
    ) -> Result<Transition, EnvError> {
        teacher_step(key, state, action, &self.params)?;
        Ok(Transition { reward: 0.0, done: state.phase == DesignPhase::Done, info: Default::default() })
    }

    fn observe_into(&self, state: &TeacherState, tokens: &mut [u8], scalars: &mut [f32]) -> u8 {
        teacher_observe_into(state, &self.params, tokens, scalars)
    }
}

impl LevelDesigner for MazeDesigner {
    type Level = MazeLevel;

    fn design(&self, state: &TeacherState) -> Result<MazeLevel, EnvError> {
        state.to_level()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn params(budget: usize) -> StaticParams {
        StaticParams { wall_budget: budget, ..StaticParams::default() }
    }

    fn run(p: &StaticParams, actions: &[usize]) -> TeacherState {
        let mut s = TeacherState::new(p);
        for (i, &a) in actions.iter().enumerate() {
            teacher_step(Key::new(i as u64), &mut s, a, p).unwrap();
        }
        s
    }

    #[test]
    fn duplicate_wall_placement_is_noop() {
        let p = params(2);
        let s = run(&p, &[5, 5, 20, 30]);
        let l = s.to_level().unwrap();
        assert_eq!(l.n_interior_walls(), 1);
        l.validate().unwrap();
    }

    #[test]
    fn goal_on_wall_clears_it() {
        let p = params(1);
        let s = run(&p, &[7, 7, 30]);
        let l = s.to_level().unwrap();
        assert_eq!(l.n_interior_walls(), 0);
        assert_eq!(l.goal_pos, Cell::new(1, 8));
    }

    #[test]
    fn agent_on_goal_moves_to_next_free_cell() {
        let p = params(1);
        let s = run(&p, &[8, 7, 7]);
        let l = s.to_level().unwrap();
        assert_eq!(l.goal_pos, Cell::new(1, 8));
        assert_eq!(l.agent_pos, Cell::new(1, 10));
        l.validate().unwrap();
    }

    #[test]
    fn zero_budget_design() {
        let p = params(0);
        let s = run(&p, &[0, 120]);
        let l = s.to_level().unwrap();
        assert_eq!(l.n_interior_walls(), 0);
        assert_eq!((l.goal_pos, l.agent_pos), (Cell::new(1, 1), Cell::new(11, 11)));
    }

    #[test]
    fn stepping_done_state_fails_and_incomplete_design_errors() {
        let p = params(0);
        let mut s = TeacherState::new(&p);
        assert_eq!(s.to_level(), Err(EnvError::IncompleteDesign));
        teacher_step(Key::new(0), &mut s, 0, &p).unwrap();
        assert_eq!(s.to_level(), Err(EnvError::IncompleteDesign));
        teacher_step(Key::new(0), &mut s, 1, &p).unwrap();
        assert_eq!(teacher_step(Key::new(0), &mut s, 2, &p), Err(EnvError::TerminalStep));
    }

    #[test]
    fn random_designs_are_valid() {
        for budget in [0, 1, 10, 60, 119] {
            let p = params(budget);
            let n = p.interior_cells();
            for seed in 0..200 {
                let mut rng = Key::new(seed).stream();
                let actions: Vec<usize> = (0..budget + 2).map(|_| rng.random_range(0..n)).collect();
                let s = run(&p, &actions);
                assert_eq!(s.phase, DesignPhase::Done);
                let l = s.to_level().unwrap();
                l.validate().unwrap();
                assert!(l.n_interior_walls() <= budget);
            }
        }
    }

    #[test]
    fn observation_codec() {
        let p = params(3);
        let d = MazeDesigner::new(p.clone()).unwrap();
        let empty = d.observe(&TeacherState::new(&p));
        assert!(empty.tokens.iter().enumerate().all(|(i, &t)| t == TeacherState::new(&p).walls[i] as u8));
        assert_eq!(empty.aux, DesignPhase::PlacingWalls as u8);
        let mut s = TeacherState::new(&p);
        for (k, a) in [4usize, 9, 9, 50, 50].into_iter().enumerate() {
            teacher_step(Key::new(3), &mut s, a, &p).unwrap();
            let obs = d.observe(&s);
            if k < 3 {
                assert_eq!((obs.scalars[0] * 3.0).round() as usize, k + 1);
            }
            let back = decode_teacher_observation(&obs, &p).unwrap();
            assert_eq!(back.phase, s.phase);
            assert_eq!(back.walls, s.walls);
            assert_eq!(back.goal_pos, s.goal_pos);
            assert_eq!(back.agent_pos, s.agent_pos);
            assert_eq!(back.n_placed, s.n_placed);
        }
    }
}
