use serde::{Deserialize, Serialize};
use ued_agents::{ModelConfig, PpoConfig};
use ued_core::maze::{StaticParams, DEFAULT_GOAL_RELOCATION_PROB};

use crate::buffer::PlrConfig;
use crate::error::RunnerError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunnerKind {
    Dr,
    Paired,
    Plr,
    Accel,
    PlrParallel,
    AccelParallel,
}

impl RunnerKind {
    pub const ALL: [RunnerKind; 6] = [
        RunnerKind::Dr,
        RunnerKind::Paired,
        RunnerKind::Plr,
        RunnerKind::Accel,
        RunnerKind::PlrParallel,
        RunnerKind::AccelParallel,
    ];

    pub fn id(self) -> &'static str {
        match self {
            RunnerKind::Dr => "dr",
            RunnerKind::Paired => "paired",
            RunnerKind::Plr => "plr",
            RunnerKind::Accel => "accel",
            RunnerKind::PlrParallel => "plr_parallel",
            RunnerKind::AccelParallel => "accel_parallel",
        }
    }

    pub fn from_id(id: &str) -> Option<RunnerKind> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn uses_buffer(self) -> bool {
        !matches!(self, RunnerKind::Dr | RunnerKind::Paired)
    }

    pub fn uses_mutations(self) -> bool {
        matches!(self, RunnerKind::Accel | RunnerKind::AccelParallel)
    }

    pub fn is_parallel(self) -> bool {
        matches!(self, RunnerKind::PlrParallel | RunnerKind::AccelParallel)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationSelection {
    /// The highest-scoring levels of the current replay batch.
    #[default]
    Batch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccelConfig {
    pub n_mutations: usize,
    pub subsample_size: usize,
    pub selection: MutationSelection,
    pub goal_relocation_prob: f64,
}

impl Default for AccelConfig {
    fn default() -> Self {
        AccelConfig {
            n_mutations: 20,
            subsample_size: 4,
            selection: MutationSelection::Batch,
            goal_relocation_prob: DEFAULT_GOAL_RELOCATION_PROB,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairedConfig {
    pub n_students: usize,
    pub teacher_entropy_coef: f32,
    /// Teacher reward is the negated return of student 0 instead of regret.
    pub minimax: bool,
}

impl Default for PairedConfig {
    fn default() -> Self {
        PairedConfig { n_students: 2, teacher_entropy_coef: 0.05, minimax: false }
    }
}

/// Everything needed to build a runner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunnerSpec {
    pub kind: RunnerKind,
    pub seed: u64,
    pub env: StaticParams,
    pub model: ModelConfig,
    pub ppo: PpoConfig,
    pub n_envs: usize,
    pub rollout_length: usize,
    pub n_shards: usize,
    pub plr: PlrConfig,
    pub accel: AccelConfig,
    pub paired: PairedConfig,
}

impl RunnerSpec {
    pub fn new(kind: RunnerKind) -> Self {
        RunnerSpec {
            kind,
            seed: 0,
            env: StaticParams::default(),
            model: ModelConfig::default(),
            ppo: PpoConfig::default(),
            n_envs: 32,
            rollout_length: 256,
            n_shards: 1,
            plr: PlrConfig::default(),
            accel: AccelConfig::default(),
            paired: PairedConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), RunnerError> {
        let bad = |m: String| Err(RunnerError::Config(m));
        self.env.validate()?;
        self.ppo.validate()?;
        self.plr.validate()?;
        if self.n_envs == 0 || self.rollout_length == 0 {
            return bad("n_envs and rollout_length must be >= 1".into());
        }
        if self.n_shards == 0 {
            return bad("n_shards must be >= 1".into());
        }
        if self.model.hidden_dim == 0 || self.model.encoder_dim == 0 || self.model.embed_dim == 0 {
            return bad("model dimensions must be >= 1".into());
        }
        if self.kind.uses_buffer() && self.plr.buffer_size % self.n_shards != 0 {
            return bad(format!(
                "plr.buffer_size {} is not divisible by n_shards {}",
                self.plr.buffer_size, self.n_shards
            ));
        }
        if self.kind.uses_buffer() && self.plr.buffer_size / self.n_shards == 0 {
            return bad("each shard needs a buffer of at least one level".into());
        }
        if self.kind.uses_mutations() {
            if self.accel.n_mutations == 0 || self.accel.subsample_size == 0 {
                return bad("accel.n_mutations and accel.subsample_size must be >= 1".into());
            }
            if self.accel.subsample_size > self.n_envs {
                return bad(format!(
                    "accel.subsample_size {} exceeds n_envs {}",
                    self.accel.subsample_size, self.n_envs
                ));
            }
            if !(0.0..=1.0).contains(&self.accel.goal_relocation_prob) {
                return bad("accel.goal_relocation_prob must be in [0, 1]".into());
            }
        }
        if self.kind == RunnerKind::Paired {
            if self.paired.n_students < 2 {
                return bad(format!("paired.n_students must be >= 2, got {}", self.paired.n_students));
            }
            if self.n_shards != 1 {
                return bad("paired does not support n_shards > 1".into());
            }
            if self.paired.teacher_entropy_coef < 0.0 {
                return bad("paired.teacher_entropy_coef must be non-negative".into());
            }
        }
        if self.ppo.minibatches > self.n_envs {
            return bad(format!("ppo.minibatches {} exceeds n_envs {}", self.ppo.minibatches, self.n_envs));
        }
        Ok(())
    }
}
