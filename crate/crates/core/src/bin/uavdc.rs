use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use uavdc::config::ExperimentConfig;
use uavdc::harness::{self, BaselineMethod, SweepKind};
use uavdc::Error;

/// UAV data-collection simulator, learner and baselines.
#[derive(Parser, Debug)]
#[command(name = "uavdc", version, arg_required_else_help = true)]
struct Cli {
    /// Print the full default configuration as TOML and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML configuration file; every field is optional.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override `output_dir`.
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the city map and write it as JSON.
    GenerateMap(Common),
    /// Train the TD3 agent; writes the training log and a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        /// Override `td3.episodes`.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Evaluate a checkpoint over independent realizations.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Override `evaluation.checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Override `evaluation.realizations`.
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Run non-learning baselines over the evaluation realizations.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum, default_value_t = BaselineArg::All)]
        method: BaselineArg,
    },
    /// Train and evaluate over a hyperparameter or altitude grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(value_enum)]
        kind: SweepArg,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineArg {
    Scan,
    Aco,
    Rrt,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepArg {
    GammaBuffer,
    NeuronsBuffer,
    Altitude,
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<Vec<PathBuf>, Error> {
    match command {
        Command::GenerateMap(common) => harness::cmd_generate_map(&load(&common)?),
        Command::Train { common, episodes } => {
            let mut cfg = load(&common)?;
            if let Some(n) = episodes {
                cfg.td3.episodes = n;
            }
            cfg.validate()?;
            let total = cfg.td3.episodes;
            harness::cmd_train(&cfg, |log| {
                if (log.episode + 1) % 100 == 0 || log.episode + 1 == total as u64 {
                    eprintln!(
                        "episode {:>6}  reward {:>9.3}  steps {:>4}  time {:>8.2}s  completed {}",
                        log.episode + 1,
                        log.accumulated_reward,
                        log.steps,
                        log.mission_time_s,
                        log.completed
                    );
                }
            })
        }
        Command::Evaluate {
            common,
            checkpoint,
            realizations,
        } => {
            let mut cfg = load(&common)?;
            if checkpoint.is_some() {
                cfg.evaluation.checkpoint = checkpoint;
            }
            if let Some(n) = realizations {
                cfg.evaluation.realizations = n;
            }
            cfg.validate()?;
            let (outputs, summary) = harness::cmd_evaluate(&cfg)?;
            eprintln!("{}\n{}", uavdc::metrics::Summary::CSV_HEADER, summary.csv_row());
            Ok(outputs)
        }
        Command::Baseline { common, method } => {
            let cfg = load(&common)?;
            let methods: Vec<BaselineMethod> = match method {
                BaselineArg::Scan => vec![BaselineMethod::Scan],
                BaselineArg::Aco => vec![BaselineMethod::Aco],
                BaselineArg::Rrt => vec![BaselineMethod::Rrt],
                BaselineArg::All => BaselineMethod::ALL.to_vec(),
            };
            let (outputs, summaries) = harness::cmd_baseline(&cfg, &methods)?;
            eprintln!("{}", uavdc::metrics::Summary::CSV_HEADER);
            for s in summaries {
                eprintln!("{}", s.csv_row());
            }
            Ok(outputs)
        }
        Command::Sweep { common, kind } => {
            let cfg = load(&common)?;
            let kind = match kind {
                SweepArg::GammaBuffer => SweepKind::GammaBuffer,
                SweepArg::NeuronsBuffer => SweepKind::NeuronsBuffer,
                SweepArg::Altitude => SweepKind::Altitude,
            };
            harness::cmd_sweep(&cfg, kind)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.print_defaults {
        match ExperimentConfig::default().to_toml() {
            Ok(text) => {
                print!("{text}");
                return ExitCode::SUCCESS;
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        }
    }
    let Some(command) = cli.command else {
        eprintln!("error: no subcommand given");
        return ExitCode::from(1);
    };
    match run(command) {
        Ok(outputs) => {
            for p in outputs {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 1,
                _ => 2,
            })
        }
    }
}
