mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ptycho_core::Error;

use crate::config::{Config, ParseError};

/// Ptychographic simulation, Langevin posterior sampling and rPIE reconstruction.
///
/// Exit codes: 0 success, 1 other failure, 2 usage or config parse error,
/// 3 I/O error, 4 unsupported or corrupt file, 5 geometry or data/plan
/// mismatch, 6 chain divergence, 7 invalid or insufficient input.
#[derive(Parser)]
#[command(name = "ptycho", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration (a previous run's manifest also works).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set scan.overlap=0.2`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a Poisson-noisy diffraction dataset (PTYD).
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Sample the latent posterior and write mean and std maps.
    Sample {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Reconstruct with rPIE.
    Rpie {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Compare a reconstruction (POBJ) or posterior samples (PSMP) with the truth.
    Metrics {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, conflicts_with = "ensemble")]
        recon: Option<PathBuf>,
        #[arg(long)]
        ensemble: Option<PathBuf>,
        /// CSV destination; printed to stdout when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build complex phantoms from pairs of IDX images (or synthetic strokes).
    Phantoms {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// IDX image file; synthetic stroke images are used when omitted.
        #[arg(long)]
        idx: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Sweep overlap and amplitude, comparing the sampler with rPIE.
    Benchmark {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        model: PathBuf,
        /// Directory of POBJ phantoms; synthetic phantoms when omitted.
        #[arg(long)]
        objects: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Write a randomly initialized reference generator (PGEN).
    ModelInit {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        latent_dim: usize,
        #[arg(long, default_value_t = 128)]
        base_channels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(args: &ConfigArgs) -> anyhow::Result<Config> {
    Config::load(args.config.as_deref(), &args.overrides)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let written = match cli.command {
        Command::Simulate { cfg, out } => commands::simulate(&load(&cfg)?, &out)?,
        Command::Sample { cfg, data, model, out } => commands::sample(&load(&cfg)?, &data, &model, &out)?,
        Command::Rpie { cfg, data, out } => commands::rpie(&load(&cfg)?, &data, &out)?,
        Command::Metrics {
            cfg,
            truth,
            recon,
            ensemble,
            out,
        } => {
            let csv = commands::metrics(&load(&cfg)?, &truth, recon.as_deref(), ensemble.as_deref(), out.as_deref())?;
            match out {
                Some(path) => path,
                None => {
                    print!("{csv}");
                    return Ok(());
                }
            }
        }
        Command::Phantoms {
            cfg,
            idx,
            count,
            seed,
            out,
        } => commands::phantoms(&load(&cfg)?, idx.as_deref(), count, seed, &out)?,
        Command::Benchmark {
            cfg,
            model,
            objects,
            out,
        } => commands::benchmark(&load(&cfg)?, &model, objects.as_deref(), &out)?,
        Command::ModelInit {
            cfg,
            out,
            latent_dim,
            base_channels,
            seed,
        } => commands::model_init(&load(&cfg)?, &out, latent_dim, base_channels, seed)?,
    };
    eprintln!("wrote {}", written.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ParseError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) => 3,
                Error::UnsupportedFormat(_) | Error::CorruptFile(_) | Error::MalformedModel(_) => 4,
                Error::GeometryMismatch(_) | Error::DataPlanMismatch(_) | Error::InvalidScanIndex { .. } => 5,
                Error::Diverged { .. } => 6,
                Error::InvalidRate(_)
                | Error::DegenerateProbe(_)
                | Error::DegenerateReference(_)
                | Error::InvalidOverlap(_)
                | Error::InvalidProbe(_)
                | Error::InvalidInput(_)
                | Error::InvalidConfig(_)
                | Error::UndefinedCorrelation(_)
                | Error::InsufficientData(_) => 7,
            };
        }
        if cause.is::<std::io::Error>() {
            return 3;
        }
    }
    1
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
