use rand::Rng;

use super::level::{Cell, Direction, MazeLevel};
use super::params::StaticParams;
use crate::error::EnvError;
use crate::rng::Key;

/// Uniform wall count in `[0, wall_budget]`, walls on distinct interior cells,
/// then goal and agent on distinct remaining cells, uniform heading.
pub fn sample_random_level(key: Key, params: &StaticParams) -> Result<MazeLevel, EnvError> {
    params.validate()?;
    let mut rng = key.stream();
    let (h, w) = (params.height, params.width);
    let mut level = MazeLevel::empty_room(h, w, Cell::new(1, 1), Direction::North, Cell::new(1, 2));
    let mut cells: Vec<Cell> = level.interior_cells().collect();
    let n_walls = rng.random_range(0..=params.wall_budget);
    // partial Fisher-Yates: the first n_walls + 2 slots become a uniform sample
    for i in 0..n_walls + 2 {
        let j = rng.random_range(i..cells.len());
        cells.swap(i, j);
    }
    for &c in &cells[..n_walls] {
        let i = level.idx(c);
        level.walls[i] = true;
    }
    level.goal_pos = cells[n_walls];
    level.agent_pos = cells[n_walls + 1];
    level.agent_dir = Direction::from_index(rng.random_range(0..4));
    Ok(level)
}
