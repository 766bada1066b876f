//! Hand-built 13x13 test mazes used for zero-shot evaluation.
//!
//! These are reconstructions of the classic out-of-distribution maze layouts
//! at the default 13x13 size, not pixel-exact copies of the originals.

use super::format::decode_level;
use super::level::MazeLevel;
use super::params::StaticParams;

pub struct NamedLevel {
    pub name: &'static str,
    pub text: &'static str,
}

pub const TEST_LEVELS: &[NamedLevel] = &[
    NamedLevel {
        name: "SixteenRooms",
        text: "\
#############\n\
#>.......#..#\n\
#..#..#.....#\n\
##.##.#.##.##\n\
#.....#..#..#\n\
#..#........#\n\
##.##.##.#.##\n\
#..#..#.....#\n\
#........#..#\n\
#.##.##.##.##\n\
#.....#.....#\n\
#..#.....#.G#\n\
#############\n",
    },
    NamedLevel {
        name: "SixteenRoomsFewerDoors",
        text: "\
#############\n\
#>.......#..#\n\
#..#..#..#..#\n\
########.##.#\n\
#........#..#\n\
#..#..#..#..#\n\
#.#########.#\n\
#.....#..#..#\n\
#..#..#.....#\n\
#####.#####.#\n\
#.....#..#..#\n\
#..#.......G#\n\
#############\n",
    },
    NamedLevel {
        name: "Labyrinth",
        text: "\
#############\n\
#v..........#\n\
#.#########.#\n\
#.#.......#.#\n\
#.#.###.#.#.#\n\
#.#.#...#.#.#\n\
#.#.#.G.#.#.#\n\
#.#.#...#.#.#\n\
#.#.#####.#.#\n\
#.#.......#.#\n\
#.#.#######.#\n\
#...........#\n\
#############\n",
    },
    NamedLevel {
        name: "Labyrinth2",
        text: "\
#############\n\
#...........#\n\
#.#######.#.#\n\
#.#.......#.#\n\
#.#.#####.#.#\n\
#.#.#...#.#.#\n\
#.#.#.G.#.#.#\n\
#.#.#...#.#.#\n\
#.#.#.###.#.#\n\
#.#.......#.#\n\
#.#########.#\n\
#..........^#\n\
#############\n",
    },
    NamedLevel {
        name: "StandardMaze",
        text: "\
#############\n\
#>#.........#\n\
#.###.#####.#\n\
#...#.#.....#\n\
###.#.#######\n\
#...#.......#\n\
#.#########.#\n\
#.....#.....#\n\
#####.#.###.#\n\
#.#...#...#.#\n\
#.#.#####.#.#\n\
#.........#G#\n\
#############\n",
    },
    NamedLevel {
        name: "StandardMaze2",
        text: "\
#############\n\
#.#........G#\n\
#.###.#####.#\n\
#.#...#.#...#\n\
#.#.###.#.###\n\
#.#...#...#.#\n\
#.###.#.###.#\n\
#.....#.....#\n\
###########.#\n\
#.#.......#.#\n\
#.#.###.###.#\n\
#>....#.....#\n\
#############\n",
    },
    NamedLevel {
        name: "StandardMaze3",
        text: "\
#############\n\
#.#.....#..>#\n\
#.###.#.###.#\n\
#.....#.#...#\n\
#######.#.#.#\n\
#.....#...#.#\n\
#####.#####.#\n\
#.......#...#\n\
#.#####.#.###\n\
#.#...#.#...#\n\
#.#.#.#####.#\n\
#G..#.......#\n\
#############\n",
    },
];

/// Static parameters matching a shipped level's grid.
pub fn params_for(level: &MazeLevel, base: &StaticParams) -> StaticParams {
    StaticParams { height: level.height, width: level.width, wall_budget: 0, ..base.clone() }
}

pub fn test_level(name: &str) -> Option<MazeLevel> {
    let entry = TEST_LEVELS.iter().find(|l| l.name == name)?;
    let params = StaticParams { height: 13, width: 13, ..StaticParams::default() };
    Some(decode_level(entry.text, &params).expect("shipped level decodes"))
}

pub fn test_levels() -> Vec<(&'static str, MazeLevel)> {
    TEST_LEVELS.iter().map(|l| (l.name, test_level(l.name).unwrap())).collect()
}
