//! `edgeward` command-line front end.

mod cmd;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::io::Usage;

#[derive(Debug, Parser)]
#[command(
    name = "edgeward",
    version,
    about = "Low-complexity multi-attack detection for edge gateways"
)]
#[command(args_override_self = true)]
struct Cli {
    /// Flat key = value config file. Keys are flag names without the leading
    /// dashes; a `[<subcommand>]` section applies to that subcommand only.
    /// Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode and normalise a CSV into LKE1 matrices.
    Preprocess(cmd::preprocess::Args),
    /// Fit the feature reducer on an encoded training set.
    PcaFit(cmd::train::PcaFitArgs),
    /// Centralized training.
    Train(cmd::train::TrainArgs),
    /// Simulated federated training over client shards.
    Federate(cmd::federate::Args),
    /// Confusion matrix, per-class report and ROC curves on a test set.
    Evaluate(cmd::evaluate::Args),
    /// Closed-form cost table over a range of hidden widths.
    Complexity(cmd::complexity::Args),
    /// Generate a seeded synthetic CSV and its schema.
    Synth(cmd::synth::Args),
    /// Inference throughput in samples per second.
    Bench(cmd::bench::Args),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Preprocess(a) => cmd::preprocess::run(a),
        Command::PcaFit(a) => cmd::train::run_pca_fit(a),
        Command::Train(a) => cmd::train::run_train(a),
        Command::Federate(a) => cmd::federate::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Complexity(a) => cmd::complexity::run(a),
        Command::Synth(a) => cmd::synth::run(a),
        Command::Bench(a) => cmd::bench::run(a),
    }
}

/// 2 for bad invocations or configuration, 1 for anything that went wrong
/// while running.
fn exit_code(err: &anyhow::Error) -> u8 {
    use edgeward_core::Error as E;
    let usage = err
        .chain()
        .any(|e| e.is::<Usage>() || matches!(e.downcast_ref::<E>(), Some(E::Config(_) | E::Schema(_))));
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
