use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spikerl::commands::{cmd_apg, cmd_drift, cmd_energy, cmd_eval, cmd_train};
use spikerl::config::RunConfig;
use spikerl::Error;

#[derive(Parser)]
#[command(name = "spikerl", version, about = "Train and analyse spiking actor networks with TD3")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> spikerl::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics, evaluations and a checkpoint.
    Train(Common),
    /// Record target-network drift against a frozen online actor.
    Drift {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "random_init")]
        checkpoint: Option<PathBuf>,
        /// Use a freshly initialised online actor instead of a checkpoint.
        #[arg(long)]
        random_init: bool,
    },
    /// Estimate per-inference energy of a stored actor.
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Evaluate a stored actor deterministically.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Average performance gain of `env,score` CSVs over a baseline CSV.
    Apg {
        #[arg(long, required = true)]
        method: Vec<PathBuf>,
        #[arg(long)]
        baseline: PathBuf,
    },
}

fn run(cli: Cli) -> spikerl::Result<()> {
    match cli.command {
        Command::Train(common) => {
            let cfg = common.load()?;
            let out = cmd_train(&cfg)?;
            println!(
                "trained {} env steps ({} updates); final mean return {:.2}; outputs in {}",
                out.trainer.env_steps(),
                out.trainer.metrics().len(),
                out.final_mean_return,
                cfg.out_dir.display()
            );
        }
        Command::Drift { common, checkpoint, random_init } => {
            let cfg = common.load()?;
            let summary = cmd_drift(&cfg, checkpoint.as_deref(), random_init)?;
            println!("delta {:.3e}", summary.delta);
            for (kind, s) in &summary.kinds {
                println!("{kind}: jumps {} max step {:.3e} final gap {:.3e}", s.jump_count, s.max_step_change, s.final_gap);
            }
        }
        Command::Energy { common, checkpoint } => {
            let cfg = common.load()?;
            println!("{}", cmd_energy(&cfg, &checkpoint)?.to_json()?);
        }
        Command::Eval { common, checkpoint } => {
            let cfg = common.load()?;
            let round = cmd_eval(&cfg, &checkpoint)?;
            println!("mean return {:.2} over {} episodes", round.mean_return(), round.episodes.len());
        }
        Command::Apg { method, baseline } => {
            for m in &method {
                let name = m.file_stem().map(|s| s.to_string_lossy()).unwrap_or_default();
                println!("{name}: APG {:.2}%", cmd_apg(m, &baseline)?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::Numeric(_) => 3,
                _ => 1,
            })
        }
    }
}
