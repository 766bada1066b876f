use std::sync::Arc;

use proptest::prelude::*;
use serde_json::{json, Value};
use ued_core::maze::{AMaze, StaticParams};
use ued_experiment::config::{parse_overrides, read_config_file};
use ued_experiment::registry::{RunnerEntry, AMAZE, RECURRENT_POLICY};
use ued_experiment::{resolve, ExperimentError, Registry, RegistryError};
use ued_runners::{Runner, RunnerKind};

fn flags(args: &[&str]) -> Vec<(String, Value)> {
    parse_overrides(&args.iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap()
}

fn toml_file(dir: &std::path::Path, text: &str) -> serde_json::Map<String, Value> {
    let p = dir.join("c.toml");
    std::fs::write(&p, text).unwrap();
    read_config_file(&p).unwrap()
}

#[test]
fn no_arguments_gives_dr_defaults() {
    let c = resolve(&Registry::builtin(), None, &[]).unwrap();
    assert_eq!(c.runner, "dr");
    assert_eq!(c.rollout_length, 256);
    assert_eq!(c.n_envs, 32);
    assert!((c.ppo.gamma - 0.995).abs() < 1e-7);
    assert_eq!(c.env, StaticParams::default());
}

#[test]
fn runner_presets_follow_the_runner() {
    let reg = Registry::builtin();
    let c = resolve(&reg, None, &flags(&["--runner", "plr"])).unwrap();
    assert!((c.ppo.gamma - 0.999).abs() < 1e-7);
    assert!((c.ppo.lr - 3e-4).abs() < 1e-9);
    assert_eq!(c.ppo.entropy_coef, 0.0);
    let c = resolve(&reg, None, &flags(&["--runner", "accel_parallel"])).unwrap();
    assert!((c.plr.replay_rate - 0.8).abs() < 1e-12);
    assert!((c.ppo.lr - 1e-4).abs() < 1e-9);
}

#[test]
fn flags_override_file_override_preset() {
    let dir = tempfile::tempdir().unwrap();
    let f = toml_file(dir.path(), "runner = \"plr\"\nseed = 5\n[plr]\nreplay_rate = 0.6\nbuffer_size = 100\n");
    let c = resolve(&Registry::builtin(), Some(&f), &flags(&["--plr.replay_rate", "0.8", "--n_envs=8"])).unwrap();
    assert_eq!(c.runner, "plr");
    assert_eq!(c.seed, 5);
    assert!((c.plr.replay_rate - 0.8).abs() < 1e-12);
    assert_eq!(c.plr.buffer_size, 100);
    assert_eq!(c.n_envs, 8);
    // untouched preset value
    assert!((c.plr.staleness_coef - 0.3).abs() < 1e-12);
}

#[test]
fn runner_flag_beats_runner_in_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = toml_file(dir.path(), "runner = \"plr\"\n");
    let c = resolve(&Registry::builtin(), Some(&f), &flags(&["--runner", "accel"])).unwrap();
    assert_eq!(c.runner, "accel");
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let reg = Registry::builtin();
    let e = resolve(&reg, None, &flags(&["--plr.no_such_field", "1"])).unwrap_err();
    assert!(e.to_string().contains("plr.no_such_field"), "{e}");
    assert_eq!(e.exit_code(), 2);
    let dir = tempfile::tempdir().unwrap();
    let f = toml_file(dir.path(), "[ppo]\nlearning_rate = 0.1\n");
    let e = resolve(&reg, Some(&f), &[]).unwrap_err();
    assert!(e.to_string().contains("ppo.learning_rate"), "{e}");
}

#[test]
fn type_errors_name_the_field() {
    let e = resolve(&Registry::builtin(), None, &flags(&["--ppo.lr", "abc"])).unwrap_err();
    let msg = e.to_string();
    assert!(msg.contains("ppo.lr"), "{msg}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn out_of_range_values_are_config_errors() {
    let reg = Registry::builtin();
    for bad in [["--plr.replay_rate", "2.0"], ["--n_envs", "0"], ["--total_updates", "0"], ["--eval.episodes_per_level", "0"]] {
        let e = resolve(&reg, None, &flags(&bad)).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{bad:?}: {e}");
    }
}

#[test]
fn overrides_parse_json_or_fall_back_to_strings() {
    let f = flags(&["--a", "1", "--b=true", "--c", "plr", "--d", "[1,2]"]);
    assert_eq!(f[0], ("a".into(), json!(1)));
    assert_eq!(f[1], ("b".into(), json!(true)));
    assert_eq!(f[2], ("c".into(), json!("plr")));
    assert_eq!(f[3], ("d".into(), json!([1, 2])));
    assert!(parse_overrides(&["positional".into()]).is_err());
    assert!(parse_overrides(&["--dangling".into()]).is_err());
}

#[test]
fn hash_ignores_output_dir_and_length() {
    let reg = Registry::builtin();
    let a = resolve(&reg, None, &[]).unwrap();
    let b = resolve(&reg, None, &flags(&["--output_dir", "elsewhere", "--total_updates", "7"])).unwrap();
    let c = resolve(&reg, None, &flags(&["--seed", "1"])).unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn flag_values_round_trip(seed in any::<u32>(), n_envs in 1usize..4096, lr in 1e-6f64..1.0, dir in "[a-z0-9_]{1,12}") {
        let reg = Registry::builtin();
        let (s, n, l) = (seed.to_string(), n_envs.to_string(), lr.to_string());
        let c = resolve(&reg, None, &flags(&["--seed", &s, "--n_envs", &n, "--ppo.lr", &l, "--output_dir", &dir])).unwrap();
        prop_assert_eq!(c.seed, seed as u64);
        prop_assert_eq!(c.n_envs, n_envs);
        prop_assert!((c.ppo.lr as f64 - lr).abs() <= 1e-6 * lr);
        prop_assert_eq!(c.output_dir.as_deref(), Some(dir.as_str()));
        let base = resolve(&reg, None, &flags(&["--seed", &s, "--n_envs", &n, "--ppo.lr", &l])).unwrap();
        prop_assert_eq!(c.hash(), base.hash());
    }
}

#[test]
fn registry_lookup_failure_lists_known_ids() {
    let reg = Registry::builtin();
    let e = resolve(&reg, None, &flags(&["--runner", "nope"])).unwrap_err();
    let msg = e.to_string();
    for id in ["dr", "paired", "plr", "accel", "plr_parallel", "accel_parallel"] {
        assert!(msg.contains(id), "{msg}");
    }
    assert_eq!(e.exit_code(), 2);
    match reg.model("nope") {
        Err(RegistryError::Missing { known, .. }) => assert_eq!(known, vec![RECURRENT_POLICY.to_string()]),
        other => panic!("{:?}", other.err()),
    }
}

#[test]
fn registry_is_write_once() {
    let mut reg = Registry::builtin();
    let f: ued_experiment::registry::EnvFactory = Arc::new(|p: &StaticParams| AMaze::new(p.clone()));
    assert!(matches!(reg.register_env(AMAZE, f.clone()), Err(RegistryError::Duplicate { .. })));
    reg.register_env("amaze_copy", f).unwrap();
    assert!(reg.ids("env").contains(&"amaze_copy".to_string()));
    let entry = RunnerEntry { kind: RunnerKind::Dr, factory: Arc::new(Runner::new) };
    assert!(reg.register_runner("dr", entry.clone()).is_err());
    reg.register_runner("my_dr", entry).unwrap();
    assert!(reg.register_default_model(AMAZE, RECURRENT_POLICY).is_err());
    // a default can only point at a registered model
    assert!(reg.register_default_model("amaze_copy", "missing_model").is_err());
    reg.register_default_model("amaze_copy", RECURRENT_POLICY).unwrap();
    assert_eq!(reg.default_model("amaze_copy").unwrap(), RECURRENT_POLICY);

    let c = resolve(&reg, None, &flags(&["--runner", "my_dr", "--env_id", "amaze_copy"])).unwrap();
    assert_eq!(c.model_id(&reg).unwrap(), RECURRENT_POLICY);
    let e: ExperimentError = resolve(&Registry::builtin(), None, &flags(&["--env_id", "amaze_copy"])).unwrap_err();
    assert!(e.to_string().contains("amaze"), "{e}");
}
