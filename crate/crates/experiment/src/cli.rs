//! The `ued` command line.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use ued_core::maze::StaticParams;

use crate::bench::{bench_sps, format_table, write_csv};
use crate::config::{parse_overrides, read_config_file, resolve};
use crate::error::ExperimentError;
use crate::eval::{evaluate, load_levels, GreedyPolicy};
use crate::levels::make_levels;
use crate::registry::Registry;
use crate::train::{load_policy, output_root, train, TrainOptions};

#[derive(Parser, Debug)]
#[command(name = "ued", version, about = "Autocurriculum training on procedural mazes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a runner. Any config key can be overridden with `--dotted.key value`.
    Train {
        /// TOML config file, applied on top of the runner preset.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Print the resolved config and exit.
        #[arg(long)]
        print_config: bool,
        /// Stop after this iteration without finishing the run.
        #[arg(long, hide = true)]
        stop_after: Option<u64>,
        #[arg(long)]
        quiet: bool,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint greedily on fixed levels.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Level files or shipped level names; defaults to all shipped levels.
        #[arg(long, num_args = 1..)]
        levels: Vec<String>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Random-action stepping throughput per batch size.
    BenchSps {
        #[arg(long, default_value = "amaze")]
        env: String,
        #[arg(long, value_delimiter = ',', default_value = "1,32,256,1024")]
        batch_sizes: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        n_steps: usize,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "sps.csv")]
        csv: PathBuf,
    },
    /// Write the shipped test mazes (and optionally random ones) to files.
    MakeLevels {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        random: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 13)]
        height: usize,
        #[arg(long, default_value_t = 13)]
        width: usize,
        #[arg(long, default_value_t = 60)]
        wall_budget: usize,
    },
}

pub fn run(cli: Cli) -> Result<(), ExperimentError> {
    let registry = Registry::builtin();
    match cli.command {
        Command::Train { config, print_config, stop_after, quiet, overrides } => {
            let file = config.as_deref().map(read_config_file).transpose()?;
            let cfg = resolve(&registry, file.as_ref(), &parse_overrides(&overrides)?)?;
            if print_config {
                println!("{}", serde_json::to_string_pretty(&cfg).expect("config serializes"));
                return Ok(());
            }
            let opts = TrainOptions { output_root: output_root(), stop_after, quiet };
            let s = train(&cfg, &registry, &opts)?;
            println!("run directory: {}", s.run_dir.display());
            if let Some(k) = s.resumed_from {
                println!("resumed from iteration {k}");
            }
            println!("finished at iteration {}", s.iteration);
            if let Some(e) = s.last_eval {
                println!("last eval: solved rate {:.3}, mean return {:.3}", e.solved_rate, e.mean_return);
            }
        }
        Command::Eval { checkpoint, levels, episodes, json } => {
            let (cfg, net, params) = load_policy(&checkpoint, &registry)?;
            let levels = load_levels(&levels, &cfg.env)?;
            let report = evaluate(&mut GreedyPolicy::new(&net, &params), &levels, &cfg.env, episodes)?;
            println!("{:<28} {:>8} {:>8} {:>8}", "level", "episodes", "solved", "return");
            for l in &report.levels {
                println!("{:<28} {:>8} {:>8.3} {:>8.3}", l.name, l.episodes, l.solved_rate, l.mean_return);
            }
            println!("{:<28} {:>8} {:>8.3} {:>8.3}", "mean", report.n_episodes, report.solved_rate, report.mean_return);
            if let Some(p) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                std::fs::write(&p, text).map_err(|e| ExperimentError::file(&p, e))?;
            }
        }
        Command::BenchSps { env, batch_sizes, n_steps, repeats, seed, csv } => {
            let env = (registry.env(&env)?)(&StaticParams::default())?;
            let rows = bench_sps(&env, &batch_sizes, n_steps, repeats, seed)?;
            print!("{}", format_table(&rows));
            write_csv(&rows, &csv)?;
        }
        Command::MakeLevels { out, random, seed, height, width, wall_budget } => {
            let params = StaticParams { height, width, wall_budget, ..StaticParams::default() };
            let written = make_levels(&out, random, &params, seed)?;
            println!("wrote {} level files to {}", written.len(), out.display());
        }
    }
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
