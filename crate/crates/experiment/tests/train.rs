mod common;

use std::fs;

use common::{opts, tiny};
use ued_experiment::train::{load_run, read_metrics, RunPaths};
use ued_experiment::{train, ExperimentError, MetricLine, Registry};
use ued_runners::RunnerKind;

fn evals(lines: &[MetricLine]) -> Vec<u64> {
    lines.iter().filter_map(|l| if let MetricLine::Eval(e) = l { Some(e.iteration) } else { None }).collect()
}

#[test]
fn eval_records_follow_the_interval() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(RunnerKind::Dr, 10);
    c.eval_interval = 5;
    let s = train(&c, &Registry::builtin(), &opts(dir.path())).unwrap();
    assert_eq!(s.iteration, 10);
    let paths = RunPaths { dir: s.run_dir.clone() };
    let lines = read_metrics(&paths.metrics()).unwrap();
    assert_eq!(evals(&lines), vec![5, 10]);
    let iters: Vec<u64> = lines.iter().filter(|l| matches!(l, MetricLine::Iteration(_))).map(|l| l.iteration()).collect();
    assert_eq!(iters, (1..=10).collect::<Vec<_>>());
    for l in &lines {
        if let MetricLine::Eval(e) = l {
            assert_eq!(e.report.n_episodes, 2);
        }
    }
    assert!(paths.manifest().exists());
    assert!(paths.checkpoint("ckpt_10").exists());
    assert_eq!(fs::read_to_string(paths.latest()).unwrap(), "ckpt_10");
    let summary = fs::read_to_string(paths.summary()).unwrap();
    assert_eq!(summary.lines().count(), 11);
    assert_eq!(fs::read_to_string(paths.timing()).unwrap().lines().count(), 10);
}

#[test]
fn identical_seeds_write_identical_metrics() {
    for kind in [RunnerKind::Plr, RunnerKind::Paired] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut c = tiny(kind, 4);
        c.eval_interval = 2;
        let ra = train(&c, &Registry::builtin(), &opts(a.path())).unwrap();
        let rb = train(&c, &Registry::builtin(), &opts(b.path())).unwrap();
        let ma = fs::read(RunPaths { dir: ra.run_dir }.metrics()).unwrap();
        let mb = fs::read(RunPaths { dir: rb.run_dir }.metrics()).unwrap();
        assert!(!ma.is_empty());
        assert_eq!(ma, mb, "{kind:?}");
    }
}

#[test]
fn resume_reproduces_the_uninterrupted_run() {
    for kind in [RunnerKind::Accel, RunnerKind::PlrParallel] {
        let whole = tempfile::tempdir().unwrap();
        let split = tempfile::tempdir().unwrap();
        let mut c = tiny(kind, 8);
        c.eval_interval = 3;
        c.checkpoint_interval = 4;
        let reg = Registry::builtin();
        let full = train(&c, &reg, &opts(whole.path())).unwrap();

        // killed at 6: iterations 5 and 6 and the eval at 6 are written past ckpt_4
        let mut o = opts(split.path());
        o.stop_after = Some(6);
        let first = train(&c, &reg, &o).unwrap();
        assert_eq!(first.iteration, 6);
        assert_eq!(read_metrics(&RunPaths { dir: first.run_dir.clone() }.metrics()).unwrap().last().unwrap().iteration(), 6);
        let second = train(&c, &reg, &opts(split.path())).unwrap();
        assert_eq!(second.resumed_from, Some(4));
        assert_eq!(second.iteration, 8);

        let a = fs::read(RunPaths { dir: full.run_dir }.metrics()).unwrap();
        let b = fs::read(RunPaths { dir: second.run_dir }.metrics()).unwrap();
        assert_eq!(String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap(), "{kind:?}");
    }
}

#[test]
fn checkpoints_round_trip_buffers_and_agents() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(RunnerKind::Paired, 2);
    let reg = Registry::builtin();
    let s = train(&c, &reg, &opts(dir.path())).unwrap();
    let run = load_run(&RunPaths { dir: s.run_dir }.checkpoint("ckpt_2"), &reg).unwrap();
    assert_eq!(run.config, c);
    assert_eq!(run.config_hash, c.hash());
    assert_eq!(run.snapshot.iteration, 2);
    let names: Vec<&str> = run.snapshot.agents.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["student0", "student1", "teacher"]);

    let dir = tempfile::tempdir().unwrap();
    let c = tiny(RunnerKind::Plr, 6);
    let s = train(&c, &reg, &opts(dir.path())).unwrap();
    let run = load_run(&RunPaths { dir: s.run_dir }.checkpoint("ckpt_6"), &reg).unwrap();
    assert_eq!(run.snapshot.buffers.len(), 1);
    assert!(!run.snapshot.buffers[0].is_empty());
}

#[test]
fn resuming_with_a_different_config_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(RunnerKind::Dr, 2);
    c.output_dir = Some("shared".into());
    let reg = Registry::builtin();
    train(&c, &reg, &opts(dir.path())).unwrap();
    c.seed += 1;
    let e = train(&c, &reg, &opts(dir.path())).unwrap_err();
    assert_eq!(e.exit_code(), 2, "{e}");
}

#[test]
fn non_finite_updates_write_a_crash_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = tiny(RunnerKind::Dr, 20);
    c.ppo.lr = 1e30;
    c.ppo.max_grad_norm = 1e30;
    let e = train(&c, &Registry::builtin(), &opts(dir.path())).unwrap_err();
    match &e {
        ExperimentError::Crashed { iteration, crash, .. } => {
            assert!(crash.exists(), "{}", crash.display());
            assert!(crash.file_name().unwrap().to_string_lossy().starts_with("crash_"));
            assert!(*iteration >= 1 && *iteration <= 20);
        }
        other => panic!("expected a crash, got {other}"),
    }
    assert_eq!(e.exit_code(), 3);
}
