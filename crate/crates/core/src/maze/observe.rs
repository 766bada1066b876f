//! Egocentric partial observations.
//!
//! The view is an `agent_view_size` square with the agent at the bottom
//! center looking up. View row 0 is the farthest row ahead; view column 0 is
//! the leftmost column from the agent's perspective.

use super::env::MazeState;
use super::level::{Cell, Direction, MazeLevel};
use super::params::StaticParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tile {
    Empty = 0,
    Wall = 1,
    Goal = 2,
    /// Outside the grid, or hidden behind a wall when occlusion is on.
    OutOfBounds = 3,
}

impl Tile {
    pub const COUNT: usize = 4;

    pub fn from_code(code: u8) -> Option<Tile> {
        match code {
            0 => Some(Tile::Empty),
            1 => Some(Tile::Wall),
            2 => Some(Tile::Goal),
            3 => Some(Tile::OutOfBounds),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MazeObservation {
    /// Row-major `agent_view_size`² tiles.
    pub view: Vec<Tile>,
    pub dir: Direction,
}

/// World cell seen at view position (`vr`, `vc`), if inside the grid.
#[inline]
fn view_to_world(
    level: &MazeLevel,
    pos: Cell,
    dir: Direction,
    view: usize,
    vr: usize,
    vc: usize,
) -> Option<Cell> {
    let forward = (view - 1 - vr) as isize;
    let lateral = vc as isize - (view / 2) as isize;
    let (fr, fc) = dir.delta();
    let (rr, rc) = dir.turn_right().delta();
    let r = pos.row as isize + forward * fr + lateral * rr;
    let c = pos.col as isize + forward * fc + lateral * rc;
    if r < 0 || c < 0 || r as usize >= level.height || c as usize >= level.width {
        None
    } else {
        Some(Cell::new(r as usize, c as usize))
    }
}

/// Writes tile codes for the view into `out` (length `view²`).
pub(crate) fn observe_codes(
    level: &MazeLevel,
    pos: Cell,
    dir: Direction,
    view: usize,
    see_through_walls: bool,
    out: &mut [u8],
) {
    debug_assert_eq!(out.len(), view * view);
    for vr in 0..view {
        for vc in 0..view {
            let tile = match view_to_world(level, pos, dir, view, vr, vc) {
                None => Tile::OutOfBounds,
                Some(cell) if level.walls[cell.row * level.width + cell.col] => Tile::Wall,
                Some(cell) if cell == level.goal_pos => Tile::Goal,
                Some(_) => Tile::Empty,
            };
            out[vr * view + vc] = tile as u8;
        }
    }
    if !see_through_walls {
        apply_occlusion(view, out);
    }
}

/// Margin of out-of-bounds cells around a [`TileGrid`]. Views up to
/// `TILE_PAD + 1` wide fit inside the margin.
pub const TILE_PAD: usize = 8;

/// Tile codes of a level surrounded by [`TILE_PAD`] out-of-bounds cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileGrid {
    pub stride: usize,
    pub codes: Vec<u8>,
}

impl TileGrid {
    pub fn new(level: &MazeLevel) -> Self {
        let stride = level.width + 2 * TILE_PAD;
        let mut codes = vec![Tile::OutOfBounds as u8; stride * (level.height + 2 * TILE_PAD)];
        for r in 0..level.height {
            let row = &mut codes[(r + TILE_PAD) * stride + TILE_PAD..][..level.width];
            for (c, code) in row.iter_mut().enumerate() {
                *code = if level.walls[r * level.width + c] { Tile::Wall as u8 } else { Tile::Empty as u8 };
            }
        }
        codes[(level.goal_pos.row + TILE_PAD) * stride + level.goal_pos.col + TILE_PAD] = Tile::Goal as u8;
        TileGrid { stride, codes }
    }
}

/// Same result as [`observe_codes`] for views up to `TILE_PAD + 1` wide. Each
/// view row (heading north or south) or view column (east or west) is one
/// contiguous run of the padded grid.
pub(crate) fn observe_padded(state: &MazeState, view: usize, see_through_walls: bool, out: &mut [u8]) {
    debug_assert!(view <= TILE_PAD + 1 && out.len() == view * view);
    let grid = &state.tiles;
    let g = &grid.codes;
    let stride = grid.stride;
    let (v, half) = (view, view / 2);
    let origin = (state.agent_pos.row + TILE_PAD) * stride + state.agent_pos.col + TILE_PAD;
    match state.agent_dir {
        Direction::North => {
            for (vr, row) in out.chunks_exact_mut(v).enumerate() {
                let c = origin - (v - 1 - vr) * stride;
                row.copy_from_slice(&g[c - half..=c + half]);
            }
        }
        Direction::South => {
            for (vr, row) in out.chunks_exact_mut(v).enumerate() {
                let c = origin + (v - 1 - vr) * stride;
                for (o, &t) in row.iter_mut().zip(g[c - half..=c + half].iter().rev()) {
                    *o = t;
                }
            }
        }
        Direction::East => {
            for vc in 0..v {
                let base = origin + vc * stride - half * stride;
                for (vr, &t) in g[base..base + v].iter().rev().enumerate() {
                    out[vr * v + vc] = t;
                }
            }
        }
        Direction::West => {
            for vc in 0..v {
                let base = origin + half * stride - vc * stride;
                for (vr, &t) in g[base + 1 - v..=base].iter().enumerate() {
                    out[vr * v + vc] = t;
                }
            }
        }
    }
    if !see_through_walls {
        apply_occlusion(view, out);
    }
}

/// Visibility propagation from the agent cell outward, row by row toward the
/// top of the view. Walls and out-of-grid cells block sight.
fn apply_occlusion(view: usize, codes: &mut [u8]) {
    let blocks = |code: u8| code == Tile::Wall as u8 || code == Tile::OutOfBounds as u8;
    let mut mask = vec![false; view * view];
    mask[(view - 1) * view + view / 2] = true;
    for r in (0..view).rev() {
        for c in 0..view - 1 {
            let i = r * view + c;
            if !mask[i] || blocks(codes[i]) {
                continue;
            }
            mask[i + 1] = true;
            if r > 0 {
                mask[i + 1 - view] = true;
                mask[i - view] = true;
            }
        }
        for c in (1..view).rev() {
            let i = r * view + c;
            if !mask[i] || blocks(codes[i]) {
                continue;
            }
            mask[i - 1] = true;
            if r > 0 {
                mask[i - 1 - view] = true;
                mask[i - view] = true;
            }
        }
    }
    for (code, visible) in codes.iter_mut().zip(mask) {
        if !visible {
            *code = Tile::OutOfBounds as u8;
        }
    }
}

pub fn observe(state: &MazeState, params: &StaticParams) -> MazeObservation {
    let v = params.agent_view_size;
    let mut codes = vec![0u8; v * v];
    observe_codes(&state.level, state.agent_pos, state.agent_dir, v, params.see_through_walls, &mut codes);
    MazeObservation {
        view: codes.into_iter().map(|c| Tile::from_code(c).unwrap()).collect(),
        dir: state.agent_dir,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maze::generate::sample_random_level;
    use crate::rng::Key;
    use std::sync::Arc;

    fn state(level: MazeLevel) -> MazeState {
        MazeState::new(Arc::new(level))
    }

    #[test]
    fn padded_grid_matches_bounds_checked_view() {
        for view in [3, 5, 7, 9, 11] {
            for see_through in [true, false] {
                let p = StaticParams { agent_view_size: view, see_through_walls: see_through, ..StaticParams::default() };
                for i in 0..40 {
                    let l = sample_random_level(Key::new(i), &p).unwrap();
                    let mut s = state(l.clone());
                    for cell in l.interior_cells().filter(|&c| !l.is_wall(c)) {
                        for dir in Direction::ALL {
                            s.agent_pos = cell;
                            s.agent_dir = dir;
                            let mut fast = vec![0u8; view * view];
                            let mut slow = vec![0u8; view * view];
                            observe_codes(&l, cell, dir, view, see_through, &mut slow);
                            if view <= TILE_PAD + 1 {
                                observe_padded(&s, view, see_through, &mut fast);
                                assert_eq!(fast, slow);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn facing_border_at_distance_one() {
        let p = StaticParams { height: 7, width: 7, ..StaticParams::default() };
        let l = MazeLevel::empty_room(7, 7, Cell::new(1, 3), Direction::North, Cell::new(5, 5));
        let obs = observe(&state(l), &p);
        // rows 0..3 are beyond the border, row 3 is the border itself
        for vc in 0..5 {
            let t = obs.view[3 * 5 + vc];
            assert!(matches!(t, Tile::Wall | Tile::OutOfBounds), "{t:?}");
            assert_eq!(obs.view[vc], Tile::OutOfBounds);
        }
        assert_eq!(obs.view[4 * 5 + 2], Tile::Empty);
    }

    #[test]
    fn goal_outside_view_not_visible() {
        let p = StaticParams::default();
        let l = MazeLevel::empty_room(13, 13, Cell::new(1, 1), Direction::East, Cell::new(11, 11));
        let obs = observe(&state(l), &p);
        assert!(!obs.view.contains(&Tile::Goal));
    }

    #[test]
    fn goal_directly_ahead() {
        let p = StaticParams::default();
        let l = MazeLevel::empty_room(13, 13, Cell::new(5, 5), Direction::East, Cell::new(5, 7));
        let obs = observe(&state(l), &p);
        // two cells ahead: view row 2, center column
        assert_eq!(obs.view[2 * 5 + 2], Tile::Goal);
        assert_eq!(obs.view.iter().filter(|&&t| t == Tile::Goal).count(), 1);
    }

    #[test]
    fn lateral_orientation() {
        // facing north, a wall to the agent's right appears in the right half
        let p = StaticParams::default();
        let mut l = MazeLevel::empty_room(13, 13, Cell::new(6, 6), Direction::North, Cell::new(1, 1));
        let i = l.idx(Cell::new(6, 7));
        l.walls[i] = true;
        let obs = observe(&state(l), &p);
        assert_eq!(obs.view[4 * 5 + 3], Tile::Wall);
        assert_eq!(obs.view[4 * 5 + 1], Tile::Empty);
    }

    #[test]
    fn rotation_symmetry_over_random_levels() {
        for see_through in [true, false] {
            let p = StaticParams { see_through_walls: see_through, ..StaticParams::default() };
            for i in 0..200 {
                let l = sample_random_level(Key::new(i), &p).unwrap();
                let a = observe(&state(l.clone()), &p);
                let mut rotated = l.clone();
                for _ in 0..3 {
                    rotated = rotated.rotate_cw();
                    let rp = StaticParams { height: rotated.height, width: rotated.width, ..p.clone() };
                    assert_eq!(observe(&state(rotated.clone()), &rp), MazeObservation { dir: rotated.agent_dir, ..a.clone() });
                }
            }
        }
    }

    #[test]
    fn occlusion_hides_cells_behind_walls() {
        let p = StaticParams { see_through_walls: false, ..StaticParams::default() };
        let mut l = MazeLevel::empty_room(13, 13, Cell::new(6, 6), Direction::North, Cell::new(3, 6));
        for c in 1..12 {
            let i = l.idx(Cell::new(5, c));
            l.walls[i] = true;
        }
        let obs = observe(&state(l.clone()), &p);
        assert!(obs.view[..15].iter().all(|&t| t == Tile::OutOfBounds));
        assert!(obs.view[15..20].iter().all(|&t| t == Tile::Wall));
        let open = observe(&state(l), &StaticParams::default());
        assert_eq!(open.view[5 + 2], Tile::Goal);
    }
}
