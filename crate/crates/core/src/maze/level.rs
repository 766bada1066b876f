use serde::{Deserialize, Serialize};

use crate::error::EnvError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::North, Direction::East, Direction::South, Direction::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Direction {
        Self::ALL[i % 4]
    }

    pub fn turn_left(self) -> Direction {
        Self::from_index(self.index() + 3)
    }

    pub fn turn_right(self) -> Direction {
        Self::from_index(self.index() + 1)
    }

    /// Unit step as (d_row, d_col).
    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::East => (0, 1),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
        }
    }
}

/// One maze instance: the free parameters of the environment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MazeLevel {
    pub height: usize,
    pub width: usize,
    /// Row-major, `true` = wall. Includes the border.
    pub walls: Vec<bool>,
    pub agent_pos: Cell,
    pub agent_dir: Direction,
    pub goal_pos: Cell,
}

impl MazeLevel {
    /// A bordered room with no interior walls.
    pub fn empty_room(height: usize, width: usize, agent_pos: Cell, agent_dir: Direction, goal_pos: Cell) -> Self {
        let walls = (0..height * width)
            .map(|i| {
                let (r, c) = (i / width, i % width);
                r == 0 || c == 0 || r == height - 1 || c == width - 1
            })
            .collect();
        MazeLevel { height, width, walls, agent_pos, agent_dir, goal_pos }
    }

    #[inline]
    pub fn idx(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    #[inline]
    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[self.idx(cell)]
    }

    pub fn is_border(&self, cell: Cell) -> bool {
        cell.row == 0 || cell.col == 0 || cell.row + 1 == self.height || cell.col + 1 == self.width
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (1..self.height.saturating_sub(1))
            .flat_map(move |r| (1..self.width.saturating_sub(1)).map(move |c| Cell::new(r, c)))
    }

    pub fn n_interior_walls(&self) -> usize {
        self.interior_cells().filter(|&c| self.is_wall(c)).count()
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidLevel(m));
        if self.height < 3 || self.width < 3 {
            return bad(format!("level must be at least 3x3, got {}x{}", self.height, self.width));
        }
        if self.walls.len() != self.height * self.width {
            return bad(format!(
                "wall grid has {} cells, expected {}",
                self.walls.len(),
                self.height * self.width
            ));
        }
        for r in 0..self.height {
            for c in 0..self.width {
                let cell = Cell::new(r, c);
                if self.is_border(cell) && !self.is_wall(cell) {
                    return bad(format!("border cell ({r}, {c}) is not a wall"));
                }
            }
        }
        for (name, cell) in [("agent", self.agent_pos), ("goal", self.goal_pos)] {
            if !self.in_bounds(cell) || self.is_border(cell) {
                return bad(format!("{name} at ({}, {}) is not an interior cell", cell.row, cell.col));
            }
            if self.is_wall(cell) {
                return bad(format!("{name} at ({}, {}) is on a wall", cell.row, cell.col));
            }
        }
        if self.agent_pos == self.goal_pos {
            return bad("agent and goal share a cell".into());
        }
        Ok(())
    }

    /// The level rotated 90 degrees clockwise, agent heading included.
    pub fn rotate_cw(&self) -> MazeLevel {
        let (h, w) = (self.height, self.width);
        let rot = |c: Cell| Cell::new(c.col, h - 1 - c.row);
        let mut walls = vec![false; h * w];
        for r in 0..h {
            for c in 0..w {
                let n = rot(Cell::new(r, c));
                walls[n.row * h + n.col] = self.walls[r * w + c];
            }
        }
        MazeLevel {
            height: w,
            width: h,
            walls,
            agent_pos: rot(self.agent_pos),
            agent_dir: self.agent_dir.turn_right(),
            goal_pos: rot(self.goal_pos),
        }
    }
}
