use rand::Rng;

use super::level::{Cell, MazeLevel};
use crate::error::EnvError;
use crate::rng::Key;

pub const DEFAULT_GOAL_RELOCATION_PROB: f64 = 0.05;

/// Applies `n_mutations` independent edits. Each edit either relocates the
/// goal to another free cell (probability `goal_relocation_prob`) or toggles
/// the wall state of an interior cell other than the agent and goal cells.
pub fn mutate_level(
    key: Key,
    level: &MazeLevel,
    n_mutations: usize,
    goal_relocation_prob: f64,
) -> Result<MazeLevel, EnvError> {
    if n_mutations == 0 {
        return Err(EnvError::InvalidParams("n_mutations must be >= 1".into()));
    }
    let mut rng = key.stream();
    let mut out = level.clone();
    let interior: Vec<Cell> = level.interior_cells().collect();
    for _ in 0..n_mutations {
        if rng.random::<f64>() < goal_relocation_prob {
            let free: Vec<Cell> = interior
                .iter()
                .copied()
                .filter(|&c| !out.is_wall(c) && c != out.agent_pos && c != out.goal_pos)
                .collect();
            if !free.is_empty() {
                out.goal_pos = free[rng.random_range(0..free.len())];
            }
        } else {
            let editable = interior.len() - 2;
            let k = rng.random_range(0..editable);
            // k-th interior cell skipping agent and goal
            let cell = *interior
                .iter()
                .filter(|&&c| c != out.agent_pos && c != out.goal_pos)
                .nth(k)
                .expect("index below editable count");
            let i = out.idx(cell);
            out.walls[i] = !out.walls[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::generate::sample_random_level;
    use crate::maze::level::Direction;
    use crate::maze::params::StaticParams;

    fn changed_cells(a: &MazeLevel, b: &MazeLevel) -> usize {
        a.interior_cells()
            .filter(|&c| a.is_wall(c) != b.is_wall(c) || (a.goal_pos == c) != (b.goal_pos == c))
            .count()
    }

    #[test]
    fn zero_mutations_rejected() {
        let l = MazeLevel::empty_room(7, 7, Cell::new(1, 1), Direction::North, Cell::new(5, 5));
        assert!(mutate_level(Key::new(0), &l, 0, 0.05).is_err());
    }

    #[test]
    fn single_edit_on_empty_room() {
        let l = MazeLevel::empty_room(13, 13, Cell::new(1, 1), Direction::North, Cell::new(11, 11));
        for i in 0..500 {
            let m = mutate_level(Key::new(i), &l, 1, 0.05).unwrap();
            let walls_added = m.n_interior_walls();
            let goal_moved = m.goal_pos != l.goal_pos;
            assert!(walls_added == 1 && !goal_moved || walls_added == 0 && goal_moved);
        }
    }

    #[test]
    fn invariants_and_diff_bound() {
        let p = StaticParams::default();
        for i in 0..300 {
            let parent = sample_random_level(Key::new(i), &p).unwrap();
            let n = 1 + (i as usize % 25);
            let child = mutate_level(Key::new(10_000 + i), &parent, n, 0.3).unwrap();
            child.validate().unwrap();
            assert_eq!(child.agent_pos, parent.agent_pos);
            assert_eq!(child.agent_dir, parent.agent_dir);
            assert!(changed_cells(&parent, &child) <= n + 1);
        }
    }
}
