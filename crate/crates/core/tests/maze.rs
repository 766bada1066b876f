use proptest::prelude::*;
use ued_core::maze::{
    bfs_apsp, decode_level, encode_level, env_metrics, mutate_level, sample_random_level, seidel_apsp, AMaze, Cell,
    MazeLevel, StaticParams,
};
use ued_core::wrappers::AutoReset;
use ued_core::{BatchEnv, BatchShape, EnvError, Environment, Key, Upomdp};

fn params(h: usize, w: usize, budget: usize) -> StaticParams {
    let budget = budget.min((h - 2) * (w - 2) - 2);
    StaticParams { height: h, width: w, wall_budget: budget, ..StaticParams::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn seidel_matches_bfs_on_arbitrary_grids(h in 3usize..12, w in 3usize..12, bits in prop::collection::vec(any::<bool>(), 144)) {
        let walls: Vec<bool> = (0..h * w).map(|i| bits[i % bits.len()]).collect();
        prop_assert_eq!(seidel_apsp(h, w, &walls), bfs_apsp(h, w, &walls));
    }

    #[test]
    fn sampled_levels_are_valid_and_within_budget(seed in any::<u64>(), h in 5usize..16, w in 5usize..16, budget in 0usize..200) {
        let p = params(h, w, budget);
        let l = sample_random_level(Key::new(seed), &p).unwrap();
        l.validate().unwrap();
        prop_assert_eq!((l.height, l.width), (h, w));
        prop_assert!(l.n_interior_walls() <= budget);
        prop_assert_eq!(sample_random_level(Key::new(seed), &p).unwrap(), l);
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>(), h in 5usize..16, w in 5usize..16, budget in 0usize..100) {
        let p = params(h, w, budget);
        let l = sample_random_level(Key::new(seed), &p).unwrap();
        let text = encode_level(&l);
        prop_assert_eq!(decode_level(&text, &p).unwrap(), l);
    }

    #[test]
    fn mutants_stay_valid_and_close(seed in any::<u64>(), n in 1usize..30, goal_prob in 0.0f64..1.0) {
        let p = params(13, 13, 60);
        let l = sample_random_level(Key::new(seed), &p).unwrap();
        let m = mutate_level(Key::new(seed).fold_in(1), &l, n, goal_prob).unwrap();
        m.validate().unwrap();
        prop_assert_eq!(m.agent_pos, l.agent_pos);
        let toggled = l.walls.iter().zip(&m.walls).filter(|(a, b)| a != b).count();
        let goal_moved = (m.goal_pos != l.goal_pos) as usize;
        prop_assert!(toggled + goal_moved <= n);
    }
}

#[test]
fn decode_rejects_malformed_text() {
    let p = params(5, 5, 10);
    let good = encode_level(&MazeLevel::empty_room(5, 5, Cell::new(1, 1), ued_core::maze::Direction::East, Cell::new(3, 3)));
    assert!(decode_level(&good, &p).is_ok());
    assert!(decode_level(&good.replacen('G', ".", 1), &p).is_err(), "missing goal");
    assert!(decode_level(&good.replacen('.', "?", 1), &p).is_err(), "unknown glyph");
    assert!(decode_level(&good, &params(7, 7, 10)).is_err(), "wrong size");
}

#[test]
fn shortest_path_metric_agrees_with_bfs() {
    let p = params(13, 13, 80);
    for i in 0..200 {
        let l = sample_random_level(Key::new(i), &p).unwrap();
        let m = env_metrics(&l);
        let d = bfs_apsp(13, 13, &l.walls).distance(l.agent_pos, l.goal_pos);
        assert_eq!(m.solvable, d.is_some());
        assert_eq!(m.shortest_path_length, d.unwrap_or(0));
    }
}

#[test]
fn batch_step_equals_lane_by_lane_steps() {
    let env = AutoReset(AMaze::new(params(9, 9, 20)).unwrap());
    let benv = BatchEnv::new(env.clone(), BatchShape::envs(6).unwrap());
    let (mut bs, mut obs) = benv.reset(Key::new(1)).unwrap();
    let mut singles: Vec<_> = (0..6).map(|i| env.reset(Key::new(1).fold_in(i)).unwrap()).collect();
    for t in 0..60u64 {
        let actions: Vec<usize> = (0..6).map(|i| ((t * 7 + i * 3) % 3) as usize).collect();
        let key = Key::new(2).fold_in(t);
        let step = benv.step(key, &mut bs, &actions).unwrap();
        for (i, s) in singles.iter_mut().enumerate() {
            assert_eq!(obs.lane(i), s.observation);
            let next = env.step(key.fold_in(i as u64), &s.state, actions[i], s.extras.clone()).unwrap();
            assert_eq!(step.rewards[i], next.reward);
            assert_eq!(step.dones[i], next.done);
            *s = next;
        }
        obs = step.obs;
    }
}

#[test]
fn reset_to_levels_broadcasts_or_assigns() {
    let p = params(9, 9, 20);
    let env = AMaze::new(p.clone()).unwrap();
    let levels: Vec<MazeLevel> = (0..3).map(|i| sample_random_level(Key::new(i), &p).unwrap()).collect();
    let benv = BatchEnv::new(env.clone(), BatchShape::new(2, 1, 3).unwrap());
    let (bs, _) = benv.reset_to_levels(&levels).unwrap();
    let got = benv.levels(&bs);
    assert_eq!(got.len(), 6);
    for (i, l) in got.iter().enumerate() {
        assert_eq!(l, &levels[i % 3]);
    }
    assert!(matches!(benv.reset_to_levels(&levels[..2]), Err(EnvError::Shape { .. })));
    let (bs, _) = BatchEnv::new(env.clone(), BatchShape::envs(3).unwrap()).reset_to_levels(&levels).unwrap();
    assert_eq!(env.get_env_state(&bs.states[1]), levels[1]);
}
