//! A uniform interface over all runners, used by the experiment driver.

use ued_agents::{AgentState, ModelSpec, Params, RecurrentPolicy};
use ued_core::maze::MazeLevel;

use crate::buffer::{BufferEntry, LevelBuffer};
use crate::config::{RunnerKind, RunnerSpec};
use crate::error::RunnerError;
use crate::paired::PairedRunner;
use crate::record::IterationRecord;
use crate::student::StudentRunner;

/// Everything a checkpoint must hold to continue a run. Environment states
/// are not included: every iteration starts fresh episodes.
#[derive(Clone, Debug, PartialEq)]
pub struct RunnerSnapshot {
    pub iteration: u64,
    pub env_steps: u64,
    /// Named agents, e.g. `student0`, `teacher`.
    pub agents: Vec<(String, AgentState)>,
    /// One list of entries per shard.
    pub buffers: Vec<Vec<BufferEntry<MazeLevel>>>,
}

pub enum Runner {
    Student(StudentRunner),
    Paired(PairedRunner),
}

impl Runner {
    pub fn new(spec: RunnerSpec) -> Result<Runner, RunnerError> {
        Ok(match spec.kind {
            RunnerKind::Paired => Runner::Paired(PairedRunner::new(spec)?),
            _ => Runner::Student(StudentRunner::new(spec)?),
        })
    }

    pub fn spec(&self) -> &RunnerSpec {
        match self {
            Runner::Student(r) => r.spec(),
            Runner::Paired(r) => r.spec(),
        }
    }

    pub fn iterate(&mut self) -> Result<IterationRecord, RunnerError> {
        match self {
            Runner::Student(r) => r.iterate(),
            Runner::Paired(r) => r.iterate(),
        }
    }

    pub fn iteration(&self) -> u64 {
        match self {
            Runner::Student(r) => r.iteration(),
            Runner::Paired(r) => r.iteration(),
        }
    }

    pub fn env_steps(&self) -> u64 {
        match self {
            Runner::Student(r) => r.env_steps(),
            Runner::Paired(r) => r.env_steps(),
        }
    }

    /// The student policy used for evaluation.
    pub fn policy(&self) -> (&RecurrentPolicy, &Params<f32>) {
        match self {
            Runner::Student(r) => (&r.agent().net, &r.student().params),
            Runner::Paired(r) => (&r.students().agent.net, &r.student_states()[0].params),
        }
    }

    /// Model spec of every named agent.
    pub fn agent_specs(&self) -> Vec<(String, ModelSpec)> {
        match self {
            Runner::Student(r) => vec![("student0".into(), r.agent().net.spec().clone())],
            Runner::Paired(r) => {
                let mut v: Vec<_> = (0..r.students().n)
                    .map(|i| (format!("student{i}"), r.students().agent.net.spec().clone()))
                    .collect();
                v.push(("teacher".into(), r.teacher().net.spec().clone()));
                v
            }
        }
    }

    pub fn snapshot(&self) -> RunnerSnapshot {
        match self {
            Runner::Student(r) => RunnerSnapshot {
                iteration: r.iteration(),
                env_steps: r.env_steps(),
                agents: vec![("student0".into(), r.student().clone())],
                buffers: r.buffers().iter().map(|b| b.entries().to_vec()).collect(),
            },
            Runner::Paired(r) => {
                let mut agents: Vec<_> =
                    r.student_states().iter().enumerate().map(|(i, s)| (format!("student{i}"), s.clone())).collect();
                agents.push(("teacher".into(), r.teacher_state().clone()));
                RunnerSnapshot { iteration: r.iteration(), env_steps: r.env_steps(), agents, buffers: Vec::new() }
            }
        }
    }

    pub fn restore(&mut self, snap: RunnerSnapshot) -> Result<(), RunnerError> {
        let names: Vec<String> = self.agent_specs().into_iter().map(|(n, _)| n).collect();
        let got: Vec<&String> = snap.agents.iter().map(|(n, _)| n).collect();
        if got.len() != names.len() || got.iter().zip(&names).any(|(a, b)| *a != b) {
            return Err(RunnerError::Snapshot(format!("agents {got:?} do not match {names:?}")));
        }
        let check = |cur: &AgentState, new: &AgentState, name: &str| {
            if cur.params.layout != new.params.layout {
                Err(RunnerError::Snapshot(format!("parameter layout of {name} differs")))
            } else {
                Ok(())
            }
        };
        match self {
            Runner::Student(r) => {
                if snap.buffers.len() != r.buffers().len() {
                    return Err(RunnerError::Snapshot(format!(
                        "{} buffers in snapshot, runner has {} shards",
                        snap.buffers.len(),
                        r.buffers().len()
                    )));
                }
                let (name, st) = snap.agents.into_iter().next().expect("one agent");
                check(r.student(), &st, &name)?;
                *r.student_mut() = st;
                for (b, entries) in r.buffers_mut().iter_mut().zip(snap.buffers) {
                    *b = LevelBuffer::from_entries(b.capacity(), entries)?;
                }
                r.set_counters(snap.iteration, snap.env_steps);
            }
            Runner::Paired(r) => {
                let mut agents = snap.agents;
                let (_, teacher) = agents.pop().expect("teacher");
                check(r.teacher_state(), &teacher, "teacher")?;
                for (i, (name, st)) in agents.into_iter().enumerate() {
                    check(&r.student_states()[i], &st, &name)?;
                    r.student_states_mut()[i] = st;
                }
                *r.teacher_state_mut() = teacher;
                r.set_counters(snap.iteration, snap.env_steps);
            }
        }
        Ok(())
    }
}
