//! Random-action stepping throughput of the batched maze. Each batch size
//! is timed several times over `n_steps` steps and the fastest run is kept.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use ued_core::maze::{AMaze, StaticParams};
use ued_core::wrappers::AutoReset;
use ued_core::{BatchEnv, BatchShape, Environment, Key};

use crate::error::ExperimentError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpsRow {
    pub batch_size: usize,
    pub n_steps: usize,
    /// Best of the timed repeats.
    pub seconds: f64,
    /// Environment steps per second over all lanes.
    pub sps: f64,
    /// Amortized cost of one environment step.
    pub ns_per_env_step: f64,
}

pub fn bench_sps(
    env: &AMaze,
    batch_sizes: &[usize],
    n_steps: usize,
    repeats: usize,
    seed: u64,
) -> Result<Vec<SpsRow>, ExperimentError> {
    if n_steps == 0 {
        return Err(ExperimentError::Config("n_steps must be >= 1".into()));
    }
    if repeats == 0 {
        return Err(ExperimentError::Config("repeats must be >= 1".into()));
    }
    if batch_sizes.is_empty() || batch_sizes.contains(&0) {
        return Err(ExperimentError::Config("batch sizes must be a non-empty list of positive integers".into()));
    }
    let n_actions = env.num_actions();
    let mut rows = Vec::new();
    for &b in batch_sizes {
        let benv = BatchEnv::new(AutoReset(env.clone()), BatchShape::envs(b)?);
        let key = Key::new(seed).fold_in(b as u64);
        let (mut state, _) = benv.reset(key)?;
        let mut rng = key.fold_in(0).stream();
        let mut actions = vec![0usize; b];
        let mut t = 0u64;
        let mut run = |steps: usize| -> Result<f64, ExperimentError> {
            let start = Instant::now();
            for _ in 0..steps {
                for a in actions.iter_mut() {
                    *a = rng.random_range(0..n_actions);
                }
                std::hint::black_box(benv.step(key.fold_in(1).fold_in(t), &mut state, &actions)?);
                t += 1;
            }
            Ok(start.elapsed().as_secs_f64())
        };
        run((n_steps / 10).clamp(1, 100))?;
        let mut seconds = f64::INFINITY;
        for _ in 0..repeats {
            seconds = seconds.min(run(n_steps)?);
        }
        let total = (b * n_steps) as f64;
        rows.push(SpsRow { batch_size: b, n_steps, seconds, sps: total / seconds, ns_per_env_step: seconds * 1e9 / total });
    }
    Ok(rows)
}

pub fn format_table(rows: &[SpsRow]) -> String {
    let mut s = format!("{:>10} {:>10} {:>12} {:>14} {:>16}\n", "batch", "steps", "seconds", "sps", "ns/env-step");
    for r in rows {
        s += &format!("{:>10} {:>10} {:>12.4} {:>14.0} {:>16.1}\n", r.batch_size, r.n_steps, r.seconds, r.sps, r.ns_per_env_step);
    }
    s
}

pub fn write_csv(rows: &[SpsRow], path: &Path) -> Result<(), ExperimentError> {
    let io = |e: std::io::Error| ExperimentError::file(path, e);
    let mut f = std::fs::File::create(path).map_err(io)?;
    writeln!(f, "batch_size,n_steps,seconds,sps,ns_per_env_step").map_err(io)?;
    for r in rows {
        writeln!(f, "{},{},{},{},{}", r.batch_size, r.n_steps, r.seconds, r.sps, r.ns_per_env_step).map_err(io)?;
    }
    Ok(())
}

/// Default grid for the benchmark.
pub fn default_env() -> AMaze {
    AMaze::new(StaticParams::default()).expect("default params are valid")
}
