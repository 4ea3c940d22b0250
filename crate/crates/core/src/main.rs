use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bbmlab::environment::{largest_clearing, read_env_file, write_env_file, ClearingMode, TrapField};
use bbmlab::experiments::harness::{checkpoint_config, ENV_STREAM};
use bbmlab::experiments::{
    render_estimates, resume_experiment, run_experiment, theory_rows, ExperimentConfig, RunOptions,
    RunStatus,
};
use bbmlab::{AxisBox, Result, RngStream};

#[derive(Parser)]
#[command(name = "bbmlab", version, about = "Monte Carlo lab for branching Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Simulate(SimulateArgs),
    /// Print closed-form reference values for a config as CSV.
    Theory {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate or inspect trap environments.
    #[command(subcommand)]
    Env(EnvCommand),
    /// Continue an interrupted run from its checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Config to check against the checkpoint; defaults to the embedded one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    env_seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    chunk_size: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanMode {
    Inscribed,
    Unconstrained,
}

#[derive(Subcommand)]
enum EnvCommand {
    /// Sample a Poisson trap field on a centred cube and write it to a file.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 0.5)]
        trap_radius: f64,
        #[arg(long)]
        half_width: f64,
        #[arg(long, default_value_t = 0)]
        env_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report the largest clearing of a stored environment.
    Scan {
        #[arg(long)]
        env_file: PathBuf,
        /// Half-width of the centred search cube; defaults to the whole domain.
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        #[arg(long, value_enum, default_value_t = ScanMode::Inscribed)]
        mode: ScanMode,
    },
}

fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("bbmlab-{}-{}", cfg.mode.as_str(), &cfg.hash()[..12])))
}

fn report(status: RunStatus) {
    match status {
        RunStatus::Complete(summary) => {
            println!(
                "wrote {} outcome rows and {} estimates to {} (config {})",
                summary.outcomes.len(),
                summary.estimates.len(),
                summary.out_dir.display(),
                summary.config_hash
            );
        }
        RunStatus::Interrupted { completed } => println!("interrupted after {completed} replicas"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let mut cfg = ExperimentConfig::from_file(&args.config)?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(seed) = args.env_seed {
                cfg.env_seed = seed;
            }
            let out = output_dir(&cfg, args.out);
            let opts = RunOptions {
                workers: args.workers,
                checkpoint: args.checkpoint,
                chunk_size: args.chunk_size,
                stop_after_chunks: None,
            };
            report(run_experiment(&cfg, &out, &opts)?);
        }
        Command::Theory { config } => {
            let cfg = ExperimentConfig::from_file(&config)?;
            cfg.validate()?;
            let rows = theory_rows(&cfg)?;
            print!("{}", render_estimates("theory", &cfg.hash(), &rows)?);
        }
        Command::Env(EnvCommand::Gen {
            dim,
            nu,
            trap_radius,
            half_width,
            env_seed,
            out,
        }) => {
            let domain = AxisBox::centered_cube(dim, half_width)?;
            let mut stream = RngStream::new(env_seed, ENV_STREAM);
            let field = TrapField::build(&mut stream, dim, nu, trap_radius, domain)?;
            write_env_file(&field, &out)?;
            println!("wrote {} atoms to {}", field.atoms().len(), out.display());
        }
        Command::Env(EnvCommand::Scan {
            env_file,
            half_width,
            resolution,
            mode,
        }) => {
            let field = read_env_file(&env_file)?;
            let search = match half_width {
                Some(w) => AxisBox::centered_cube(field.dim(), w)?,
                None => field.domain().clone(),
            };
            let mode = match mode {
                ScanMode::Inscribed => ClearingMode::Inscribed,
                ScanMode::Unconstrained => ClearingMode::Unconstrained,
            };
            let rep = largest_clearing(&field, &search, resolution, mode)?;
            println!("radius={} center={:?} resolution={}", rep.radius, rep.center, rep.resolution);
        }
        Command::Resume {
            checkpoint,
            config,
            out,
            workers,
        } => {
            let cfg = config.as_deref().map(ExperimentConfig::from_file).transpose()?;
            let out = match (out, &cfg) {
                (Some(o), _) => o,
                (None, Some(c)) => output_dir(c, None),
                (None, None) => output_dir(&checkpoint_config(&checkpoint)?, None),
            };
            let opts = RunOptions {
                workers,
                ..RunOptions::default()
            };
            report(resume_experiment(cfg.as_ref(), &checkpoint, &out, &opts)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
