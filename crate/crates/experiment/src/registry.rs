//! Name-to-factory lookup for environments, runners and models.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;
use ued_agents::{ModelSpec, RecurrentPolicy};
use ued_core::maze::{AMaze, StaticParams};
use ued_core::EnvError;
use ued_runners::{Runner, RunnerError, RunnerKind, RunnerSpec};

pub type EnvFactory = Arc<dyn Fn(&StaticParams) -> Result<AMaze, EnvError> + Send + Sync>;
pub type RunnerFactory = Arc<dyn Fn(RunnerSpec) -> Result<Runner, RunnerError> + Send + Sync>;
pub type ModelFactory = Arc<dyn Fn(ModelSpec) -> RecurrentPolicy + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("{kind} id {id:?} is already registered")]
    Duplicate { kind: &'static str, id: String },
    #[error("unknown {kind} id {id:?}; known ids: {}", known.join(", "))]
    Missing { kind: &'static str, id: String, known: Vec<String> },
}

#[derive(Clone)]
pub struct RunnerEntry {
    pub kind: RunnerKind,
    pub factory: RunnerFactory,
}

#[derive(Clone, Default)]
pub struct Registry {
    envs: BTreeMap<String, EnvFactory>,
    runners: BTreeMap<String, RunnerEntry>,
    models: BTreeMap<String, ModelFactory>,
    default_models: BTreeMap<String, String>,
}

fn insert<V>(map: &mut BTreeMap<String, V>, kind: &'static str, id: &str, v: V) -> Result<(), RegistryError> {
    if map.contains_key(id) {
        return Err(RegistryError::Duplicate { kind, id: id.to_string() });
    }
    map.insert(id.to_string(), v);
    Ok(())
}

fn lookup<'a, V>(map: &'a BTreeMap<String, V>, kind: &'static str, id: &str) -> Result<&'a V, RegistryError> {
    map.get(id).ok_or_else(|| RegistryError::Missing { kind, id: id.to_string(), known: map.keys().cloned().collect() })
}

pub const RECURRENT_POLICY: &str = "recurrent_policy";
pub const AMAZE: &str = "amaze";

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The maze environment, all six runners and the recurrent policy.
    pub fn builtin() -> Self {
        let mut r = Registry::new();
        r.register_env(AMAZE, Arc::new(|p: &StaticParams| AMaze::new(p.clone()))).unwrap();
        for kind in RunnerKind::ALL {
            let factory: RunnerFactory = Arc::new(move |mut spec: RunnerSpec| {
                spec.kind = kind;
                Runner::new(spec)
            });
            r.register_runner(kind.id(), RunnerEntry { kind, factory }).unwrap();
        }
        r.register_model(RECURRENT_POLICY, Arc::new(RecurrentPolicy::new)).unwrap();
        r.register_default_model(AMAZE, RECURRENT_POLICY).unwrap();
        r
    }

    pub fn register_env(&mut self, id: &str, f: EnvFactory) -> Result<(), RegistryError> {
        insert(&mut self.envs, "env", id, f)
    }

    pub fn register_runner(&mut self, id: &str, e: RunnerEntry) -> Result<(), RegistryError> {
        insert(&mut self.runners, "runner", id, e)
    }

    pub fn register_model(&mut self, id: &str, f: ModelFactory) -> Result<(), RegistryError> {
        insert(&mut self.models, "model", id, f)
    }

    pub fn register_default_model(&mut self, env_id: &str, model_id: &str) -> Result<(), RegistryError> {
        lookup(&self.envs, "env", env_id)?;
        lookup(&self.models, "model", model_id)?;
        insert(&mut self.default_models, "default model for env", env_id, model_id.to_string())
    }

    pub fn env(&self, id: &str) -> Result<&EnvFactory, RegistryError> {
        lookup(&self.envs, "env", id)
    }

    pub fn runner(&self, id: &str) -> Result<&RunnerEntry, RegistryError> {
        lookup(&self.runners, "runner", id)
    }

    pub fn model(&self, id: &str) -> Result<&ModelFactory, RegistryError> {
        lookup(&self.models, "model", id)
    }

    pub fn default_model(&self, env_id: &str) -> Result<&str, RegistryError> {
        lookup(&self.default_models, "default model for env", env_id).map(String::as_str)
    }

    pub fn ids(&self, kind: &str) -> Vec<String> {
        match kind {
            "env" => self.envs.keys().cloned().collect(),
            "runner" => self.runners.keys().cloned().collect(),
            "model" => self.models.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }
}
