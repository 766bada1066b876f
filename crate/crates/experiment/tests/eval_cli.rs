use std::path::Path;
use std::process::{Command, Output};

use ued_agents::{ModelConfig, ModelSpec, RecurrentPolicy};
use ued_core::maze::assets::test_level;
use ued_core::maze::{AMaze, Cell, Direction, MazeAction, MazeLevel, StaticParams};
use ued_core::{BatchObs, Environment, Key};
use ued_experiment::bench::{bench_sps, default_env};
use ued_experiment::eval::load_level;
use ued_experiment::levels::make_levels;
use ued_experiment::{evaluate, ActionPolicy, GreedyPolicy};
use ued_agents::AgentError;

struct AlwaysForward;

impl ActionPolicy for AlwaysForward {
    fn act(&mut self, obs: &BatchObs, _resets: &[bool]) -> Result<Vec<usize>, AgentError> {
        Ok(vec![MazeAction::Forward as usize; obs.len()])
    }
}

fn corridor() -> (String, MazeLevel) {
    ("corridor".into(), MazeLevel::empty_room(7, 7, Cell::new(3, 1), Direction::East, Cell::new(3, 5)))
}

#[test]
fn optimal_policy_solves_every_episode() {
    let base = StaticParams { height: 7, width: 7, max_episode_steps: 50, ..Default::default() };
    let r = evaluate(&mut AlwaysForward, &[corridor()], &base, 10).unwrap();
    assert_eq!(r.n_episodes, 10);
    assert_eq!(r.solved_rate, 1.0);
    assert_eq!(r.levels[0].mean_length, 4.0);
    let expected = 1.0 - 0.9 * 4.0 / 50.0;
    assert!((r.mean_return - expected).abs() < 1e-6);
}

#[test]
fn untrained_policy_rarely_solves_labyrinth() {
    let base = StaticParams::default();
    let env = AMaze::new(base.clone()).unwrap();
    let net = RecurrentPolicy::new(ModelSpec::new(env.obs_spec(), env.num_actions(), ModelConfig::default()));
    let params = net.init(Key::new(0));
    let levels = vec![("Labyrinth".to_string(), test_level("Labyrinth").unwrap())];
    let r = evaluate(&mut GreedyPolicy::new(&net, &params), &levels, &base, 10).unwrap();
    assert_eq!(r.n_episodes, 10);
    assert!(r.solved_rate <= 0.1, "{}", r.solved_rate);
}

#[test]
fn episode_count_is_levels_times_episodes() {
    let base = StaticParams::default();
    let levels: Vec<_> = ["SixteenRooms", "Labyrinth", "StandardMaze"]
        .iter()
        .map(|n| (n.to_string(), test_level(n).unwrap()))
        .collect();
    let r = evaluate(&mut AlwaysForward, &levels, &base, 10).unwrap();
    assert_eq!(r.n_episodes, 30);
    assert_eq!(r.levels.len(), 3);
    assert!(r.levels.iter().all(|l| l.episodes == 10));
    assert!(evaluate(&mut AlwaysForward, &levels, &base, 0).is_err());
}

#[test]
fn undecodable_level_file_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("broken.txt");
    std::fs::write(&p, "#####\n#.?.#\n#####\n").unwrap();
    let e = load_level(p.to_str().unwrap(), &StaticParams::default()).unwrap_err();
    assert!(e.to_string().contains("broken.txt"), "{e}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn made_levels_load_back() {
    let dir = tempfile::tempdir().unwrap();
    let params = StaticParams::default();
    let written = make_levels(dir.path(), 3, &params, 1).unwrap();
    assert_eq!(written.len(), 7 + 3);
    for p in &written {
        let (name, level) = load_level(p.to_str().unwrap(), &params).unwrap();
        if let Some(shipped) = test_level(&name) {
            assert_eq!(level, shipped);
        }
    }
}

#[test]
fn bench_reports_one_row_per_batch_size() {
    let rows = bench_sps(&default_env(), &[1, 32, 256, 1024], 5, 1, 0).unwrap();
    assert_eq!(rows.iter().map(|r| r.batch_size).collect::<Vec<_>>(), [1, 32, 256, 1024]);
    assert!(rows.iter().all(|r| r.sps > 0.0 && r.ns_per_env_step > 0.0));
    let rows = bench_sps(&default_env(), &[1, 256], 400, 3, 0).unwrap();
    assert!(rows[1].ns_per_env_step <= rows[0].ns_per_env_step, "{rows:?}");
    assert!(bench_sps(&default_env(), &[1], 0, 1, 0).is_err());
    assert!(bench_sps(&default_env(), &[], 5, 1, 0).is_err());
    assert!(bench_sps(&default_env(), &[0], 5, 1, 0).is_err());
}

fn ued(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ued")).args(args).env("UED_OUTPUT_ROOT", root).output().unwrap()
}

const TINY: &str = r#"
runner = "plr"
n_envs = 4
rollout_length = 16
total_updates = 3
eval_interval = 3
output_dir = "cli_run"
[env]
height = 7
width = 7
max_episode_steps = 20
agent_view_size = 3
wall_budget = 10
[model]
embed_dim = 4
aux_dim = 2
encoder_dim = 16
hidden_dim = 16
[eval]
episodes_per_level = 2
levels = ["SixteenRooms"]
"#;

#[test]
fn cli_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let code = |o: &Output| o.status.code().unwrap();

    assert_eq!(code(&ued(root, &[])), 2);
    assert_eq!(code(&ued(root, &["--help"])), 0);
    assert_eq!(code(&ued(root, &["train", "--plr.replay_rate", "2.0"])), 2);
    assert_eq!(code(&ued(root, &["train", "--nope", "1"])), 2);
    assert_eq!(code(&ued(root, &["train", "--runner", "nope"])), 2);
    assert_eq!(code(&ued(root, &["bench-sps", "--n-steps", "0"])), 2);

    let o = ued(root, &["train", "--print-config"]);
    assert_eq!(code(&o), 0);
    let cfg: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(cfg["rollout_length"], 256);
    assert_eq!(cfg["runner"], "dr");

    let toml = root.join("tiny.toml");
    std::fs::write(&toml, TINY).unwrap();
    let o = ued(root, &["train", "-c", toml.to_str().unwrap(), "--quiet", "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = root.join("cli_run");
    assert!(run.join("metrics.jsonl").exists());
    let ckpt = run.join("checkpoints").join("ckpt_3");
    assert!(ckpt.exists());

    let report = root.join("report.json");
    let o = ued(root, &["eval", "--checkpoint", ckpt.to_str().unwrap(), "--levels", "Labyrinth", "SixteenRooms", "--episodes", "3", "--json", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["n_episodes"], 6);

    let broken = root.join("broken.txt");
    std::fs::write(&broken, "not a maze").unwrap();
    let o = ued(root, &["eval", "--checkpoint", ckpt.to_str().unwrap(), "--levels", broken.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.txt"));
    assert_eq!(code(&ued(root, &["eval", "--checkpoint", root.join("missing").to_str().unwrap()])), 2);

    let levels = root.join("levels");
    let o = ued(root, &["make-levels", "--out", levels.to_str().unwrap(), "--random", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_dir(&levels).unwrap().count(), 9);

    let csv = root.join("sps.csv");
    let o = ued(root, &["bench-sps", "--batch-sizes", "1,8", "--n-steps", "10", "--repeats", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
}
