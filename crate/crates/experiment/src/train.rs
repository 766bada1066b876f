//! The training loop: iterate, log, evaluate, checkpoint, resume.
//!
//! Run directory layout:
//!
//! ```text
//! manifest.json          resolved config and its hash
//! metrics.jsonl          one record per iteration plus eval records
//! timing.jsonl           wall-clock per iteration (not deterministic)
//! summary.csv            per-iteration summary written at the end
//! checkpoints/ckpt_<i>   checkpoint after iteration i
//! checkpoints/latest     name of the newest checkpoint
//! ```

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use ued_agents::{AgentState, Checkpoint, ModelSpec, NamedTensor, Params, RecurrentPolicy};
use ued_core::maze::{decode_level, encode_level, MazeLevel, StaticParams};
use ued_core::Environment;
use ued_runners::{BufferEntry, IterationRecord, Runner, RunnerError, RunnerSnapshot};

use crate::config::ExperimentConfig;
use crate::error::ExperimentError;
use crate::eval::{evaluate, load_levels, EvalReport, GreedyPolicy};
use crate::registry::Registry;

pub const OUTPUT_ROOT_VAR: &str = "UED_OUTPUT_ROOT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iteration: u64,
    pub env_steps: u64,
    #[serde(flatten)]
    pub report: EvalReport,
}

/// One line of `metrics.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricLine {
    Iteration(IterationRecord),
    Eval(EvalRecord),
}

impl MetricLine {
    pub fn iteration(&self) -> u64 {
        match self {
            MetricLine::Iteration(r) => r.iteration,
            MetricLine::Eval(r) => r.iteration,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    pub output_root: PathBuf,
    /// Return after this iteration as if the process had been killed.
    pub stop_after: Option<u64>,
    pub quiet: bool,
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub run_dir: PathBuf,
    pub iteration: u64,
    pub resumed_from: Option<u64>,
    pub last_eval: Option<EvalReport>,
}

pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn manifest(&self) -> PathBuf {
        self.dir.join("manifest.json")
    }
    pub fn metrics(&self) -> PathBuf {
        self.dir.join("metrics.jsonl")
    }
    pub fn timing(&self) -> PathBuf {
        self.dir.join("timing.jsonl")
    }
    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.csv")
    }
    pub fn checkpoints(&self) -> PathBuf {
        self.dir.join("checkpoints")
    }
    pub fn checkpoint(&self, name: &str) -> PathBuf {
        self.checkpoints().join(name)
    }
    pub fn latest(&self) -> PathBuf {
        self.checkpoints().join("latest")
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::file(path, e)
}

pub fn train(cfg: &ExperimentConfig, registry: &Registry, opts: &TrainOptions) -> Result<TrainSummary, ExperimentError> {
    cfg.validate(registry)?;
    let paths = RunPaths { dir: cfg.run_dir(&opts.output_root) };
    fs::create_dir_all(paths.checkpoints()).map_err(io_err(&paths.dir))?;
    let eval_levels = load_levels(&cfg.eval.levels, &cfg.env)?;
    let spec = cfg.runner_spec(registry)?;
    let mut runner = (registry.runner(&cfg.runner)?.factory)(spec)?;

    let resumed_from = match read_latest(&paths)? {
        Some(name) => {
            let path = paths.checkpoint(&name);
            let (snap, hash) = load_snapshot(&path, &cfg.env, registry)?;
            if hash != cfg.hash() {
                return Err(ExperimentError::Config(format!(
                    "{} was written by a different config (hash {hash}); use another output_dir",
                    path.display()
                )));
            }
            runner.restore(snap)?;
            truncate_metrics(&paths.metrics(), runner.iteration())?;
            Some(runner.iteration())
        }
        None => {
            File::create(paths.metrics()).map_err(io_err(&paths.metrics()))?;
            File::create(paths.timing()).map_err(io_err(&paths.timing()))?;
            None
        }
    };
    write_manifest(&paths, cfg)?;

    let open_append = |p: PathBuf| OpenOptions::new().append(true).create(true).open(&p).map_err(io_err(&p));
    let mut metrics = open_append(paths.metrics())?;
    let mut timing = open_append(paths.timing())?;
    let mut last_eval = None;
    while runner.iteration() < cfg.total_updates {
        let start = Instant::now();
        let steps_before = runner.env_steps();
        let rec = match runner.iterate() {
            Ok(r) => r,
            Err(e) => return Err(crash(&paths, &runner, cfg, e)),
        };
        let it = rec.iteration;
        let secs = start.elapsed().as_secs_f64();
        append_line(&mut metrics, &paths.metrics(), &MetricLine::Iteration(rec.clone()))?;
        let sps = (runner.env_steps() - steps_before) as f64 / secs.max(1e-12);
        append_line(&mut timing, &paths.timing(), &json!({"iteration": it, "seconds": secs, "sps": sps}))?;
        if !opts.quiet && (it % 10 == 0 || it == 1) {
            eprintln!(
                "[{}] iter {it} steps {} mode {} return {:.3} solved {:.3} ({sps:.0} sps)",
                cfg.runner, rec.env_steps, rec.mode, rec.mean_return, rec.solved_rate
            );
        }
        if cfg.eval_interval > 0 && it % cfg.eval_interval == 0 {
            let (net, params) = runner.policy();
            let report = evaluate(&mut GreedyPolicy::new(net, params), &eval_levels, &cfg.env, cfg.eval.episodes_per_level)?;
            if !opts.quiet {
                eprintln!("[{}] eval @ {it}: solved {:.3} return {:.3}", cfg.runner, report.solved_rate, report.mean_return);
            }
            let line = MetricLine::Eval(EvalRecord { iteration: it, env_steps: runner.env_steps(), report: report.clone() });
            append_line(&mut metrics, &paths.metrics(), &line)?;
            last_eval = Some(report);
        }
        let final_iter = it == cfg.total_updates;
        if final_iter || (cfg.checkpoint_interval > 0 && it % cfg.checkpoint_interval == 0) {
            let name = format!("ckpt_{it}");
            save_snapshot(&paths.checkpoint(&name), &runner, cfg)?;
            write_atomic(&paths.latest(), name.as_bytes())?;
        }
        if opts.stop_after == Some(it) {
            return Ok(TrainSummary { run_dir: paths.dir, iteration: it, resumed_from, last_eval });
        }
    }
    write_summary(&paths)?;
    Ok(TrainSummary { run_dir: paths.dir, iteration: runner.iteration(), resumed_from, last_eval })
}

fn crash(paths: &RunPaths, runner: &Runner, cfg: &ExperimentConfig, source: RunnerError) -> ExperimentError {
    let path = paths.checkpoint(&format!("crash_{}", runner.iteration()));
    if let Err(e) = save_snapshot(&path, runner, cfg) {
        eprintln!("failed to write crash checkpoint: {e}");
    }
    ExperimentError::Crashed { iteration: runner.iteration() + 1, crash: path, source }
}

fn append_line(f: &mut File, path: &Path, v: &impl Serialize) -> Result<(), ExperimentError> {
    let mut s = serde_json::to_string(v).expect("record serializes");
    s.push('\n');
    f.write_all(s.as_bytes()).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExperimentError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_manifest(paths: &RunPaths, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let manifest = json!({
        "config": cfg,
        "config_hash": cfg.hash(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_atomic(&paths.manifest(), serde_json::to_string_pretty(&manifest).expect("manifest serializes").as_bytes())
}

fn read_latest(paths: &RunPaths) -> Result<Option<String>, ExperimentError> {
    let p = paths.latest();
    match fs::read_to_string(&p) {
        Ok(s) => Ok(Some(s.trim().to_string())),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(ExperimentError::file(p, e)),
    }
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricLine>, ExperimentError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ExperimentError::file(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Drops records written after the checkpoint being resumed from.
fn truncate_metrics(path: &Path, iteration: u64) -> Result<(), ExperimentError> {
    let keep: Vec<MetricLine> = match read_metrics(path) {
        Ok(v) => v.into_iter().filter(|l| l.iteration() <= iteration).collect(),
        Err(_) if !path.exists() => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut s = String::new();
    for l in &keep {
        s += &serde_json::to_string(l).expect("record serializes");
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

fn write_summary(paths: &RunPaths) -> Result<(), ExperimentError> {
    let lines = read_metrics(&paths.metrics())?;
    let mut evals: BTreeMap<u64, f64> = BTreeMap::new();
    for l in &lines {
        if let MetricLine::Eval(e) = l {
            evals.insert(e.iteration, e.report.solved_rate);
        }
    }
    let mut s = String::from("iteration,env_steps,mode,mean_return,solved_rate,mean_shortest_path,eval_solved_rate\n");
    for l in &lines {
        if let MetricLine::Iteration(r) = l {
            let ev = evals.get(&r.iteration).map(|v| v.to_string()).unwrap_or_default();
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                r.iteration, r.env_steps, r.mode, r.mean_return, r.solved_rate, r.mean_shortest_path, ev
            );
        }
    }
    write_atomic(&paths.summary(), s.as_bytes())
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    level: String,
    score: f64,
    max_return: f64,
    last_sampled: u64,
    insert_iter: u64,
}

#[derive(Serialize, Deserialize)]
struct StoredAgent {
    name: String,
    adam_step: u64,
}

#[derive(Serialize, Deserialize)]
struct RunMetadata {
    kind: String,
    iteration: u64,
    env_steps: u64,
    config_hash: String,
    config: ExperimentConfig,
    agents: Vec<StoredAgent>,
    buffers: Vec<Vec<StoredEntry>>,
}

const RUN_KIND: &str = "ued-run";

pub fn save_snapshot(path: &Path, runner: &Runner, cfg: &ExperimentConfig) -> Result<(), ExperimentError> {
    let snap = runner.snapshot();
    let mut tensors: Vec<NamedTensor> = Vec::new();
    for (name, st) in &snap.agents {
        tensors.extend(st.to_tensors(name));
    }
    let meta = RunMetadata {
        kind: RUN_KIND.into(),
        iteration: snap.iteration,
        env_steps: snap.env_steps,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        agents: snap.agents.iter().map(|(n, s)| StoredAgent { name: n.clone(), adam_step: s.opt.step }).collect(),
        buffers: snap
            .buffers
            .iter()
            .map(|b| {
                b.iter()
                    .map(|e| StoredEntry {
                        level: encode_level(&e.level),
                        score: e.score as f64,
                        max_return: e.max_return as f64,
                        last_sampled: e.last_sampled,
                        insert_iter: e.insert_iter,
                    })
                    .collect()
            })
            .collect(),
    };
    let ck = Checkpoint { metadata: serde_json::to_value(meta).expect("metadata serializes"), tensors };
    ck.save(path).map_err(|e| ExperimentError::Checkpoint { path: path.into(), msg: e.to_string() })
}

/// A checkpoint's config, policy parameters and full runner snapshot.
pub struct LoadedRun {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub snapshot: RunnerSnapshot,
}

fn read_checkpoint(path: &Path) -> Result<(Checkpoint, RunMetadata), ExperimentError> {
    let ck_err = |msg: String| ExperimentError::Checkpoint { path: path.into(), msg };
    let ck = Checkpoint::load(path).map_err(|e| ck_err(e.to_string()))?;
    let meta: RunMetadata = serde_json::from_value(ck.metadata.clone()).map_err(|e| ck_err(format!("metadata: {e}")))?;
    if meta.kind != RUN_KIND {
        return Err(ck_err(format!("not a run checkpoint (kind {:?})", meta.kind)));
    }
    Ok((ck, meta))
}

/// Reads a checkpoint written by [`save_snapshot`]. Model shapes come from the
/// stored config.
pub fn load_run(path: &Path, registry: &Registry) -> Result<LoadedRun, ExperimentError> {
    if !path.is_file() {
        return Err(ExperimentError::file(path, "no such checkpoint file"));
    }
    let (ck, meta) = read_checkpoint(path)?;
    let ck_err = |msg: String| ExperimentError::Checkpoint { path: path.into(), msg };
    let cfg = meta.config;
    let specs = agent_specs(&cfg, registry)?;
    let by_name: BTreeMap<&str, &NamedTensor> = ck.tensors.iter().map(|t| (t.name.as_str(), t)).collect();
    let mut agents = Vec::new();
    for a in &meta.agents {
        let spec = specs
            .iter()
            .find(|(n, _)| n == &a.name)
            .map(|(_, s)| s)
            .ok_or_else(|| ck_err(format!("unexpected agent {:?}", a.name)))?;
        let st = AgentState::from_tensors(spec, &a.name, &by_name, a.adam_step).map_err(|e| ck_err(e.to_string()))?;
        agents.push((a.name.clone(), st));
    }
    let buffers = decode_buffers(&meta.buffers, &cfg.env).map_err(ck_err)?;
    Ok(LoadedRun {
        config_hash: meta.config_hash,
        snapshot: RunnerSnapshot { iteration: meta.iteration, env_steps: meta.env_steps, agents, buffers },
        config: cfg,
    })
}

fn load_snapshot(path: &Path, env: &StaticParams, registry: &Registry) -> Result<(RunnerSnapshot, String), ExperimentError> {
    let run = load_run(path, registry)?;
    if &run.config.env != env {
        return Err(ExperimentError::Config(format!("{} uses different env parameters", path.display())));
    }
    Ok((run.snapshot, run.config_hash))
}

fn decode_buffers(stored: &[Vec<StoredEntry>], env: &StaticParams) -> Result<Vec<Vec<BufferEntry<MazeLevel>>>, String> {
    stored
        .iter()
        .map(|b| {
            b.iter()
                .map(|e| {
                    Ok(BufferEntry {
                        level: decode_level(&e.level, env).map_err(|err| format!("buffer level: {err}"))?,
                        score: e.score as f32,
                        max_return: e.max_return as f32,
                        last_sampled: e.last_sampled,
                        insert_iter: e.insert_iter,
                    })
                })
                .collect()
        })
        .collect()
}

/// Model specs of the agents a config's runner owns, without building it.
pub fn agent_specs(cfg: &ExperimentConfig, registry: &Registry) -> Result<Vec<(String, ModelSpec)>, ExperimentError> {
    let env = (registry.env(&cfg.env_id)?)(&cfg.env)?;
    let student = ModelSpec::new(env.obs_spec(), env.num_actions(), cfg.model.clone());
    let mut out = Vec::new();
    if cfg.kind(registry)? == ued_runners::RunnerKind::Paired {
        for i in 0..cfg.paired.n_students {
            out.push((format!("student{i}"), student.clone()));
        }
        let teacher = ued_core::maze::MazeDesigner::new(cfg.env.clone())?;
        out.push(("teacher".into(), ModelSpec::new(teacher.obs_spec(), teacher.num_actions(), cfg.model.clone())));
    } else {
        out.push(("student0".into(), student));
    }
    Ok(out)
}

/// The evaluation policy stored in a checkpoint.
pub fn load_policy(path: &Path, registry: &Registry) -> Result<(ExperimentConfig, RecurrentPolicy, Params<f32>), ExperimentError> {
    let run = load_run(path, registry)?;
    let (_, st) = run
        .snapshot
        .agents
        .into_iter()
        .find(|(n, _)| n == "student0")
        .ok_or_else(|| ExperimentError::Checkpoint { path: path.into(), msg: "no student0 agent".into() })?;
    let model = registry.model(run.config.model_id(registry)?)?;
    let specs = agent_specs(&run.config, registry)?;
    let net = model(specs[0].1.clone());
    Ok((run.config, net, st.params))
}
