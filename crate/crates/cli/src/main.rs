//! Benchmark harness for saliency-as-a-side-effect experiments.
//!
//! Subcommands: `gen` (synthetic pop-out datasets), `train` (two-phase
//! training to a checkpoint), `predict` (saliency maps per image),
//! `centerbias` (Gaussian or split-based priors), `eval` (the seven-metric
//! report), and `ablate` (the center-bias/fusion grid).

mod cmd_ablate;
mod cmd_centerbias;
mod cmd_eval;
mod cmd_gen;
mod cmd_predict;
mod cmd_train;
mod evalcore;
mod util;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "saliency", version, about)]
struct Cli {
    /// Root random seed; every component derives a named sub-seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// JSON file with defaults for unset flags (explicit flags win).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic pop-out dataset with a manifest.
    Gen(cmd_gen::GenArgs),
    /// Pretrain the RGB branch and head, then train the saliency branch.
    Train(cmd_train::TrainArgs),
    /// Write a saliency map per manifest entry from a checkpoint.
    Predict(cmd_predict::PredictArgs),
    /// Build unsupervised (Gaussian) or supervised (split) center-bias maps.
    Centerbias(cmd_centerbias::CenterbiasArgs),
    /// Evaluate predictions with the full fixation-metric suite.
    Eval(cmd_eval::EvalArgs),
    /// Sweep center-bias shapes, DVA factors, and fusion modes.
    Ablate(cmd_ablate::AblateArgs),
}

pub(crate) struct Common {
    pub seed: u64,
    pub file_config: util::FileConfig,
    pub quiet: bool,
}

impl Common {
    pub fn say(&self, message: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", message.as_ref());
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let common = match util::FileConfig::load(cli.config.as_deref()) {
        Ok(file_config) => Common {
            seed: cli.seed,
            file_config,
            quiet: cli.quiet,
        },
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen::run(&common, args),
        Command::Train(args) => cmd_train::run(&common, args),
        Command::Predict(args) => cmd_predict::run(&common, args),
        Command::Centerbias(args) => cmd_centerbias::run(&common, args),
        Command::Eval(args) => cmd_eval::run(&common, args),
        Command::Ablate(args) => cmd_ablate::run(&common, args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
