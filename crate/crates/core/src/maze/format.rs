//! Plain-text level files.
//!
//! One grid row per line: `#` wall, `.` empty, `G` goal, and `^ > v <` for the
//! agent facing north, east, south or west.

use super::level::{Cell, Direction, MazeLevel};
use super::params::StaticParams;
use crate::error::EnvError;

fn agent_char(d: Direction) -> char {
    match d {
        Direction::North => '^',
        Direction::East => '>',
        Direction::South => 'v',
        Direction::West => '<',
    }
}

pub fn encode_level(level: &MazeLevel) -> String {
    let mut out = String::with_capacity(level.height * (level.width + 1));
    for r in 0..level.height {
        for c in 0..level.width {
            let cell = Cell::new(r, c);
            out.push(if cell == level.agent_pos {
                agent_char(level.agent_dir)
            } else if cell == level.goal_pos {
                'G'
            } else if level.is_wall(cell) {
                '#'
            } else {
                '.'
            });
        }
        out.push('\n');
    }
    out
}

/// Parses a level and checks it against the grid size in `params`. Line and
/// column numbers in errors are 1-based.
pub fn decode_level(text: &str, params: &StaticParams) -> Result<MazeLevel, EnvError> {
    let err = |line: usize, col: usize, msg: String| EnvError::Parse { line, col, msg };
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let lines: Vec<&str> = match lines.iter().rposition(|l| !l.is_empty()) {
        Some(last) => lines[..=last].to_vec(),
        None => Vec::new(),
    };
    if lines.len() != params.height {
        return Err(err(lines.len().max(1), 1, format!("expected {} rows, found {}", params.height, lines.len())));
    }
    let (h, w) = (params.height, params.width);
    let mut walls = vec![false; h * w];
    let mut agent: Option<(Cell, Direction)> = None;
    let mut goal: Option<Cell> = None;
    for (r, line) in lines.iter().enumerate() {
        let n = line.chars().count();
        if n != w {
            return Err(err(r + 1, n.min(w) + 1, format!("expected {w} columns, found {n}")));
        }
        for (c, ch) in line.chars().enumerate() {
            let cell = Cell::new(r, c);
            let dir = match ch {
                '#' => {
                    walls[r * w + c] = true;
                    None
                }
                '.' => None,
                'G' => {
                    if goal.replace(cell).is_some() {
                        return Err(err(r + 1, c + 1, "duplicate goal".into()));
                    }
                    None
                }
                '^' => Some(Direction::North),
                '>' => Some(Direction::East),
                'v' => Some(Direction::South),
                '<' => Some(Direction::West),
                other => return Err(err(r + 1, c + 1, format!("illegal character {other:?}"))),
            };
            if let Some(d) = dir {
                if agent.replace((cell, d)).is_some() {
                    return Err(err(r + 1, c + 1, "duplicate agent".into()));
                }
            }
        }
    }
    let (agent_pos, agent_dir) = agent.ok_or_else(|| err(h, w, "missing agent".into()))?;
    let goal_pos = goal.ok_or_else(|| err(h, w, "missing goal".into()))?;
    let level = MazeLevel { height: h, width: w, walls, agent_pos, agent_dir, goal_pos };
    level.validate()?;
    Ok(level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::generate::sample_random_level;
    use crate::rng::Key;

    fn small() -> StaticParams {
        StaticParams { height: 5, width: 5, wall_budget: 2, ..StaticParams::default() }
    }

    #[test]
    fn roundtrip_random_levels() {
        let p = StaticParams::default();
        for i in 0..300 {
            let l = sample_random_level(Key::new(i), &p).unwrap();
            assert_eq!(decode_level(&encode_level(&l), &p).unwrap(), l);
        }
    }

    #[test]
    fn known_text() {
        let text = "#####\n#>..#\n#.#.#\n#..G#\n#####\n";
        let l = decode_level(text, &small()).unwrap();
        assert_eq!(l.agent_pos, Cell::new(1, 1));
        assert_eq!(l.agent_dir, Direction::East);
        assert_eq!(l.goal_pos, Cell::new(3, 3));
        assert_eq!(l.n_interior_walls(), 1);
        assert_eq!(encode_level(&l), text);
    }

    #[test]
    fn errors() {
        let p = small();
        let cases = [
            ("#####\n#>..#\n#...#\n#...#\n#####\n", "missing goal"),
            ("#####\n#>.G#\n#..G#\n#...#\n#####\n", "duplicate goal"),
            ("#####\n#>.G#\n#.<.#\n#...#\n#####\n", "duplicate agent"),
            ("#####\n#>.G#\n#.x.#\n#...#\n#####\n", "illegal"),
            ("#####\n#>.G#\n#...#\n#####\n", "rows"),
            ("#####\n#>.G#\n#....#\n#...#\n#####\n", "columns"),
        ];
        for (text, needle) in cases {
            match decode_level(text, &p) {
                Err(EnvError::Parse { msg, .. }) => assert!(msg.contains(needle), "{msg} vs {needle}"),
                other => panic!("expected parse error for {needle}, got {other:?}"),
            }
        }
        match decode_level("#####\n#>.G#\n#.x.#\n#...#\n#####\n", &p) {
            Err(EnvError::Parse { line, col, .. }) => assert_eq!((line, col), (3, 3)),
            other => panic!("{other:?}"),
        }
        // open border fails level validation
        assert!(matches!(
            decode_level("#####\n>..G#\n#...#\n#...#\n#####\n", &p),
            Err(EnvError::InvalidLevel(_))
        ));
    }
}
