use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hh_inverse::StepControl;

mod commands;
mod config;
mod io;

use config::ConfigError;

#[derive(Parser)]
#[command(
    name = "hhinv",
    version,
    about = "Recover Hodgkin-Huxley conductances or gating exponents from a noisy voltage trace"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's output_dir, then ./out.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(clap::Args, Clone)]
pub struct RunOverrides {
    /// Discrepancy factor, must exceed 2.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Iteration cap.
    #[arg(long = "max-iter")]
    pub max_iter: Option<usize>,
    /// Noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// plain applies w as computed; safeguarded halves it until the residual drops.
    #[arg(long = "step-control")]
    pub step_control: Option<StepControl>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward problem with the configured true parameters.
    Forward {
        #[command(flatten)]
        common: Common,
    },
    /// Write a noisy observation of the forward solution.
    Perturb {
        #[command(flatten)]
        common: Common,
        /// Relative noise level, 0.05 for 5%.
        #[arg(long)]
        epsilon: f64,
        /// Noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one inversion on an observation file or on synthetic noisy data.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Observation CSV written by `perturb`.
        #[arg(long, conflicts_with = "epsilon")]
        observation: Option<PathBuf>,
        /// Relative noise level for a synthetic observation.
        #[arg(long, required_unless_present = "observation")]
        epsilon: Option<f64>,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run one inversion per configured noise level and tabulate the results.
    Table {
        #[command(flatten)]
        common: Common,
        /// 2 for the conductance table, 3 for the exponent table.
        #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
        which: u8,
        /// Also write the per-iteration trace of every row.
        #[arg(long)]
        traces: bool,
        #[command(flatten)]
        overrides: RunOverrides,
    },
}

/// Maps a failure to the documented exit codes.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        return 2;
    }
    match err
        .chain()
        .find_map(|e| e.downcast_ref::<hh_inverse::Error>())
    {
        Some(hh_inverse::Error::Divergence { .. }) => 3,
        Some(hh_inverse::Error::ZeroGradient { .. }) => 4,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Forward { common } => commands::forward(&common),
        Command::Perturb {
            common,
            epsilon,
            seed,
        } => commands::perturb(&common, epsilon, seed),
        Command::Invert {
            common,
            observation,
            epsilon,
            overrides,
        } => commands::invert(&common, observation.as_deref(), epsilon, &overrides),
        Command::Table {
            common,
            which,
            traces,
            overrides,
        } => commands::table(&common, which, traces, &overrides),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
