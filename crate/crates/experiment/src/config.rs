//! Experiment configuration.
//!
//! A config is resolved in three layers: the preset of the chosen runner,
//! then an optional TOML file, then `--dotted.key value` flags. All layers are
//! merged as JSON trees; keys absent from the preset are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use ued_agents::{ModelConfig, PpoConfig};
use ued_core::maze::StaticParams;
use ued_runners::{AccelConfig, PairedConfig, PlrConfig, RunnerKind, RunnerSpec};

use crate::error::ExperimentError;
use crate::registry::{Registry, AMAZE};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes_per_level: usize,
    /// Shipped level names or paths to level files. Empty means every
    /// shipped test level.
    pub levels: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { episodes_per_level: 10, levels: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub runner: String,
    pub env_id: String,
    /// `None` selects the registered default for `env_id`.
    pub model_id: Option<String>,
    pub seed: u64,
    pub n_envs: usize,
    pub rollout_length: usize,
    pub n_shards: usize,
    /// Number of runner iterations.
    pub total_updates: u64,
    /// 0 disables periodic evaluation.
    pub eval_interval: u64,
    /// 0 keeps only the final checkpoint.
    pub checkpoint_interval: u64,
    /// Relative paths resolve against the output root.
    pub output_dir: Option<String>,
    pub env: StaticParams,
    pub model: ModelConfig,
    pub ppo: PpoConfig,
    pub plr: PlrConfig,
    pub accel: AccelConfig,
    pub paired: PairedConfig,
    pub eval: EvalConfig,
}

/// Per-runner defaults for the LSTM-era benchmark settings.
pub fn preset(kind: RunnerKind) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        runner: kind.id().to_string(),
        env_id: AMAZE.to_string(),
        model_id: None,
        seed: 0,
        n_envs: 32,
        rollout_length: 256,
        n_shards: 1,
        total_updates: 30_000,
        eval_interval: 250,
        checkpoint_interval: 1000,
        output_dir: None,
        env: StaticParams::default(),
        model: ModelConfig::default(),
        ppo: PpoConfig::default(),
        plr: PlrConfig::default(),
        accel: AccelConfig::default(),
        paired: PairedConfig::default(),
        eval: EvalConfig::default(),
    };
    let (gamma, lambda, lr, ent) = match kind {
        RunnerKind::Dr | RunnerKind::Paired => (0.995, 0.98, 1e-4, 1e-3),
        RunnerKind::Plr | RunnerKind::Accel => (0.999, 0.98, 3e-4, 0.0),
        RunnerKind::PlrParallel => (0.999, 0.95, 3e-4, 0.0),
        RunnerKind::AccelParallel => (0.999, 0.98, 1e-4, 1e-3),
    };
    c.ppo.gamma = gamma;
    c.ppo.gae_lambda = lambda;
    c.ppo.lr = lr;
    c.ppo.entropy_coef = ent;
    c.plr.replay_rate = if kind.uses_mutations() { 0.8 } else { 0.5 };
    c.plr.staleness_coef = if kind == RunnerKind::Plr { 0.3 } else { 0.5 };
    c
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        preset(RunnerKind::Dr)
    }
}

impl ExperimentConfig {
    pub fn kind(&self, registry: &Registry) -> Result<RunnerKind, ExperimentError> {
        Ok(registry.runner(&self.runner)?.kind)
    }

    pub fn model_id<'a>(&'a self, registry: &'a Registry) -> Result<&'a str, ExperimentError> {
        match &self.model_id {
            Some(m) => Ok(m),
            None => Ok(registry.default_model(&self.env_id)?),
        }
    }

    pub fn runner_spec(&self, registry: &Registry) -> Result<RunnerSpec, ExperimentError> {
        Ok(RunnerSpec {
            kind: self.kind(registry)?,
            seed: self.seed,
            env: self.env.clone(),
            model: self.model.clone(),
            ppo: self.ppo.clone(),
            n_envs: self.n_envs,
            rollout_length: self.rollout_length,
            n_shards: self.n_shards,
            plr: self.plr.clone(),
            accel: self.accel.clone(),
            paired: self.paired.clone(),
        })
    }

    pub fn validate(&self, registry: &Registry) -> Result<(), ExperimentError> {
        registry.env(&self.env_id)?;
        registry.model(self.model_id(registry)?)?;
        self.runner_spec(registry)?.validate()?;
        if self.total_updates == 0 {
            return Err(ExperimentError::Config("total_updates must be >= 1".into()));
        }
        if self.eval.episodes_per_level == 0 {
            return Err(ExperimentError::Config("eval.episodes_per_level must be >= 1".into()));
        }
        Ok(())
    }

    /// Identifies everything that determines the metrics stream. The output
    /// location and the run length are excluded so a run can be extended.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.total_updates = 0;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_dir(&self, output_root: &Path) -> PathBuf {
        let name = self.output_dir.clone().unwrap_or_else(|| format!("{}_seed{}", self.runner, self.seed));
        let p = PathBuf::from(name);
        if p.is_absolute() {
            p
        } else {
            output_root.join(p)
        }
    }
}

/// Parses `--a.b value` and `--a.b=value` pairs. Values are read as JSON when
/// they parse as JSON and as plain strings otherwise.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, Value)>, ExperimentError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let Some(flag) = a.strip_prefix("--") else {
            return Err(ExperimentError::Config(format!("expected a --key flag, found {a:?}")));
        };
        let (key, raw) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ExperimentError::Config(format!("flag --{flag} has no value")))?;
                (flag.to_string(), v.clone())
            }
        };
        if key.is_empty() {
            return Err(ExperimentError::Config("empty flag name".into()));
        }
        let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
        out.push((key, value));
    }
    Ok(out)
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), ExperimentError> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| ExperimentError::Config(format!("unknown key `{key}`: `{}` is not a table", parts[..i].join("."))))?;
        let slot = obj.get_mut(*part).ok_or_else(|| ExperimentError::Config(format!("unknown key `{key}`")))?;
        if i + 1 == parts.len() {
            // `--output_dir 9` parses as a number; string slots (and the
            // optional strings, which default to null) keep the literal text
            *slot = match value {
                Value::Number(_) | Value::Bool(_) if slot.is_string() || slot.is_null() => Value::String(value.to_string()),
                v => v,
            };
            return Ok(());
        }
        cur = slot;
    }
    unreachable!("split yields at least one part")
}

fn overlay(base: &mut Value, file: &Map<String, Value>, prefix: &str) -> Result<(), ExperimentError> {
    for (k, v) in file {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let slot = base
            .as_object_mut()
            .and_then(|o| o.get_mut(k))
            .ok_or_else(|| ExperimentError::Config(format!("unknown key `{path}`")))?;
        match (slot.is_object(), v) {
            (true, Value::Object(sub)) => overlay(slot, sub, &path)?,
            _ => *slot = v.clone(),
        }
    }
    Ok(())
}

pub fn read_config_file(path: &Path) -> Result<Map<String, Value>, ExperimentError> {
    let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::file(path, e))?;
    let v: Value = toml::from_str(&text).map_err(|e| ExperimentError::file(path, e))?;
    match v {
        Value::Object(m) => Ok(m),
        _ => Err(ExperimentError::file(path, "top level must be a table")),
    }
}

/// Resolves preset < file < flags into a validated config.
pub fn resolve(
    registry: &Registry,
    file: Option<&Map<String, Value>>,
    overrides: &[(String, Value)],
) -> Result<ExperimentConfig, ExperimentError> {
    let from_file = file.and_then(|f| f.get("runner"));
    let from_flag = overrides.iter().rev().find(|(k, _)| k == "runner").map(|(_, v)| v);
    let runner = match from_flag.or(from_file) {
        None => RunnerKind::Dr.id().to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => return Err(ExperimentError::Config(format!("runner: expected a string, got {other}"))),
    };
    let kind = registry.runner(&runner)?.kind;
    let mut tree = serde_json::to_value(preset(kind)).expect("preset serializes");
    if let Some(f) = file {
        overlay(&mut tree, f, "")?;
    }
    for (k, v) in overrides {
        set_path(&mut tree, k, v.clone())?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(tree)
        .map_err(|e| ExperimentError::Config(format!("{}: {}", e.path(), e.inner())))?;
    cfg.validate(registry)?;
    Ok(cfg)
}
