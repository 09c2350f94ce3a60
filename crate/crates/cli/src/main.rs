//! Command-line experiment runner for squeezed-light distillation protocols.

mod config_file;
mod emit;
mod runners;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Output serialization format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Comma-separated table with a mandatory header row.
    Csv,
    /// Pretty-printed structured report.
    Json,
}

/// Heralded operation the purifier applies before Gaussification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PurifyPath {
    /// Fock filter that eliminates the single-photon component.
    Filter,
    /// Two-photon subtraction, which cannot remove loss noise.
    Subtract,
}

/// Flags shared by every subcommand; unset values fall back to the config file.
#[derive(Args, Clone, Default)]
pub struct CommonArgs {
    /// Input squeeze parameter.
    #[arg(long)]
    pub r: Option<f64>,
    /// Displacement offset squared, or the literal "opt" for the optimal value.
    #[arg(long, allow_hyphen_values = true)]
    pub delta_sq: Option<String>,
    /// Tap beam-splitter transmittance.
    #[arg(long)]
    pub transmittance: Option<f64>,
    /// Heralding detector efficiency.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Target squeezed-quadrature variance.
    #[arg(long)]
    pub target_vy: Option<f64>,
    /// Basis dimension; auto-raised until truncation-clean when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Gaussification step budget.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Convergence tolerance between Gaussification iterates.
    #[arg(long)]
    pub conv_tol: Option<f64>,
    /// Output format (default: csv for tables, json for reports).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweep evaluation.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed recorded with the run for randomized sweeps.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file with key = value lines and per-command sections; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Distillation of a squeezed vacuum by displacement-augmented two-photon subtraction.
#[derive(Args, Clone, Default)]
pub struct DistillArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also run the Gaussification cascade on the subtracted state.
    #[arg(long)]
    pub gaussify: bool,
}

/// Success-probability optimization over a grid of target variances.
#[derive(Args, Clone, Default)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated list of target variances.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub targets: Option<Vec<f64>>,
    /// First target of an evenly spaced grid.
    #[arg(long)]
    pub target_start: Option<f64>,
    /// Last target of an evenly spaced grid.
    #[arg(long)]
    pub target_stop: Option<f64>,
    /// Number of points in the evenly spaced grid.
    #[arg(long)]
    pub target_count: Option<usize>,
}

/// Iterated two-copy Gaussification of the subtracted state, with a per-step trace.
#[derive(Args, Clone, Default)]
pub struct GaussifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Fock-filter purification of coherent or loss-degraded squeezed inputs.
#[derive(Args, Clone, Default)]
pub struct PurifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Coherent input amplitude.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Transmittance of the loss channel degrading the squeezed input.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Antisqueezed variance of the mixed input.
    #[arg(long)]
    pub vx: Option<f64>,
    /// Squeezed variance of the mixed input.
    #[arg(long)]
    pub vy: Option<f64>,
    /// Heralded operation applied before Gaussification.
    #[arg(long, value_enum)]
    pub path: Option<PurifyPath>,
}

/// Coincident two-mode subtraction on a two-mode squeezed vacuum, then decoupling.
#[derive(Args, Clone, Default)]
pub struct TwoModeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Breeding of a grid-state approximation from two squeezed single photons.
#[derive(Args, Clone, Default)]
pub struct BreedArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Homodyne condition on the idler mode.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    Distill(DistillArgs),
    OptimizeSweep(SweepArgs),
    Gaussify(GaussifyArgs),
    Purify(PurifyArgs),
    TwoMode(TwoModeArgs),
    Breed(BreedArgs),
}

/// Experiment runner for squeezed-light distillation, purification, and breeding.
#[derive(Parser)]
#[command(name = "sqdistill", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Everything that can go wrong between parsing flags and writing the output file.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The flag set or config file is inconsistent or unparseable.
    #[error("configuration: {0}")]
    Config(String),
    /// A library call failed; the context names the command and parameter set.
    #[error("{context}: {source}")]
    Module {
        context: String,
        #[source]
        source: sqdistill_core::Error,
    },
    /// The output file could not be written.
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
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

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Distill(mut args) => {
            if let Some(path) = args.common.config.clone() {
                let file = config_file::load(&path, "distill")?;
                config_file::apply_common(&mut args.common, &file)?;
                if !args.gaussify {
                    args.gaussify = file.flag("gaussify")?.unwrap_or(false);
                }
            }
            runners::distill(&args)
        }
        Command::OptimizeSweep(mut args) => {
            if let Some(path) = args.common.config.clone() {
                let file = config_file::load(&path, "optimize-sweep")?;
                config_file::apply_common(&mut args.common, &file)?;
                if args.targets.is_none() {
                    args.targets = file.f64_array("targets")?;
                }
                if args.target_start.is_none() {
                    args.target_start = file.f64("target-start")?;
                }
                if args.target_stop.is_none() {
                    args.target_stop = file.f64("target-stop")?;
                }
                if args.target_count.is_none() {
                    args.target_count = file.usize("target-count")?;
                }
            }
            runners::optimize_sweep(&args)
        }
        Command::Gaussify(mut args) => {
            if let Some(path) = args.common.config.clone() {
                let file = config_file::load(&path, "gaussify")?;
                config_file::apply_common(&mut args.common, &file)?;
            }
            runners::gaussify(&args)
        }
        Command::Purify(mut args) => {
            if let Some(path) = args.common.config.clone() {
                let file = config_file::load(&path, "purify")?;
                config_file::apply_common(&mut args.common, &file)?;
                if args.alpha.is_none() {
                    args.alpha = file.f64("alpha")?;
                }
                if args.t0.is_none() {
                    args.t0 = file.f64("t0")?;
                }
                if args.vx.is_none() {
                    args.vx = file.f64("vx")?;
                }
                if args.vy.is_none() {
                    args.vy = file.f64("vy")?;
                }
                if args.path.is_none() {
                    args.path = file.purify_path("path")?;
                }
            }
            runners::purify(&args)
        }
        Command::TwoMode(mut args) => {
            if let Some(path) = args.common.config.clone() {
                let file = config_file::load(&path, "two-mode")?;
                config_file::apply_common(&mut args.common, &file)?;
            }
            runners::two_mode(&args)
        }
        Command::Breed(mut args) => {
            if let Some(path) = args.common.config.clone() {
                let file = config_file::load(&path, "breed")?;
                config_file::apply_common(&mut args.common, &file)?;
                if args.x.is_none() {
                    args.x = file.f64("x")?;
                }
            }
            runners::breed(&args)
        }
    }
}
