use ued_core::maze::{mutate_level, MazeLevel};
use ued_core::{EnvError, Key};

/// Produces edited copies of levels for ACCEL-style curricula.
pub trait LevelMutator: Send + Sync {
    fn mutate(&self, key: Key, level: &MazeLevel, n_mutations: usize) -> Result<MazeLevel, EnvError>;
}

/// Random wall toggles with occasional goal relocation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MazeMutator {
    pub goal_relocation_prob: f64,
}

impl LevelMutator for MazeMutator {
    fn mutate(&self, key: Key, level: &MazeLevel, n_mutations: usize) -> Result<MazeLevel, EnvError> {
        mutate_level(key, level, n_mutations, self.goal_relocation_prob)
    }
}

/// Returns the parent unchanged.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityMutator;

impl LevelMutator for IdentityMutator {
    fn mutate(&self, _key: Key, level: &MazeLevel, _n_mutations: usize) -> Result<MazeLevel, EnvError> {
        Ok(level.clone())
    }
}
