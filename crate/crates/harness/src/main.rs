use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use forage_core::NoiseMode;
use forage_harness::{bench, emit_outputs, generate, run_experiment, write_scenarios, Algo, MatrixConfig, RunOptions, TrainFile};
use forage_learn::{read_checkpoint, run_training, write_checkpoint, EpisodeLog};

#[derive(Parser)]
#[command(name = "forage", about = "Foraging controller experiments", version)]
struct Cli {
    /// Seed for every random draw of the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scenario matrix as `<out>/<kind>/<stem>.scn`.
    Gen {
        /// TOML matrix file; the default matrix is used without it.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one controller on every scenario, resuming where results exist.
    Run {
        #[arg(long)]
        algo: String,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        ablate_pheromones: bool,
        #[arg(long, default_value = "normal")]
        noise_mode: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train a policy; writes `policy.ckpt` and `train_log.csv` to `out`.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Continue from this checkpoint.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Time a controller on every scenario; prints CSV to stdout.
    Bench {
        #[arg(long)]
        algo: String,
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Only the first N scenarios, by path.
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Aggregate run results into per-cell CSVs and SVG plots.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn noise_mode(name: &str) -> Result<NoiseMode> {
    NoiseMode::parse(name).with_context(|| format!("unknown noise mode `{name}`"))
}

fn train(config: &Path, out: &Path, init: Option<&Path>, seed: u64) -> Result<()> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let config = TrainFile::parse(&text)?.to_config(seed)?;
    let initial = match init {
        Some(p) => Some(read_checkpoint(&std::fs::read_to_string(p)?).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    std::fs::create_dir_all(out)?;
    let log_path = out.join("train_log.csv");
    let mut log = std::io::BufWriter::new(std::fs::File::create(&log_path)?);
    writeln!(log, "{}", EpisodeLog::CSV_HEADER)?;
    let mut write_failed = None;
    let outcome = run_training(&config, initial, |row| {
        if let Err(e) = writeln!(log, "{}", row.csv_row()) {
            write_failed.get_or_insert(e);
        }
        if row.episode % 100 == 0 {
            log::info!("episode {} reward {:.3} loss {:.4}", row.episode, row.mean_reward, row.losses.total);
        }
    })?;
    if let Some(e) = write_failed {
        bail!("writing {}: {e}", log_path.display());
    }
    log.flush()?;
    let ckpt = out.join("policy.ckpt");
    std::fs::write(&ckpt, write_checkpoint(&outcome.network))?;
    println!("wrote {} and {}", ckpt.display(), log_path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { matrix, out } => {
            let matrix = match matrix {
                Some(p) => MatrixConfig::from_toml(&std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?,
                None => MatrixConfig::default(),
            };
            let files = generate(&matrix, cli.seed)?;
            let written = write_scenarios(&out, &files)?;
            println!("wrote {} scenario files to {}", written.len(), out.display());
        }
        Command::Run {
            algo,
            scenarios,
            out,
            ablate_pheromones,
            noise_mode: mode,
            checkpoint,
        } => {
            let algo = Algo::resolve(&algo, checkpoint.as_deref())?;
            let options = RunOptions {
                seed: cli.seed,
                ablate_pheromones,
                noise_mode: noise_mode(&mode)?,
            };
            let s = run_experiment(&scenarios, &algo, &out, &options)?;
            println!("{}: {} run, {} already present", algo.name(), s.completed, s.skipped);
        }
        Command::Train { config, out, init } => train(&config, &out, init.as_deref(), cli.seed)?,
        Command::Bench {
            algo,
            scenarios,
            checkpoint,
            limit,
        } => {
            let algo = Algo::resolve(&algo, checkpoint.as_deref())?;
            let options = RunOptions {
                seed: cli.seed,
                ..RunOptions::default()
            };
            println!("kind,stem,team,steps,controller_ms_per_step,controller_ms_per_agent_step,world_ms_per_step");
            for (file, t) in bench(&scenarios, &algo, &options, limit)? {
                let per_agent = t.per_agent_step.map(|v| format!("{:.6}", v * 1e3)).unwrap_or_default();
                println!(
                    "{},{},{},{},{:.6},{per_agent},{:.6}",
                    file.scenario.kind.name(),
                    file.key.stem(),
                    t.team,
                    t.steps,
                    t.per_step * 1e3,
                    t.per_world_step * 1e3
                );
            }
        }
        Command::Plot { input, out } => {
            let written = emit_outputs(&input, &out)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
    }
    Ok(())
}
