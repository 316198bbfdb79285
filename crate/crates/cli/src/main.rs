//! `gbt`: granular-ball twin-hyperplane classification from the command
//! line. Every stochastic step takes an explicit seed and all machine
//! output is JSON or CSV, so runs with identical arguments are
//! byte-identical.

mod commands;
mod plot;

use clap::{Parser, Subcommand};
use gbt_core::Error;

#[derive(Parser)]
#[command(
    name = "gbt",
    version,
    about = "Granular-ball twin hyperplane classifiers (GBTSVM / LS-GBTSVM)",
    after_help = "Exit codes: 0 success, 1 parse/io, 2 degenerate or invalid input, \
                  3 granulation did not converge, 4 solver failure.\n\
                  Set RUST_LOG=info for progress logging."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a dataset into granular balls and write them as JSON
    Granulate(commands::GranulateArgs),
    /// Granulate and fit a twin model, writing it as JSON
    Train(commands::TrainArgs),
    /// Predict labels for a feature CSV with a trained model
    Predict(commands::PredictArgs),
    /// Accuracy of a trained model on a labeled CSV
    Eval(commands::EvalArgs),
    /// Generate a synthetic dataset CSV
    Synth(commands::SynthArgs),
    /// Flip a fraction of labels in a dataset CSV
    Noise(commands::NoiseArgs),
    /// Train/evaluate a model grid over datasets × noise levels and
    /// emit the comparative statistics
    Benchmark(commands::BenchmarkArgs),
    /// Rank statistics (Friedman, Nemenyi CD, win-tie-loss) from an
    /// accuracy CSV or a published average-rank vector
    Stats(commands::StatsArgs),
    /// Verify the slack-difference tolerance bounds of a fitted linear model
    Vtub(commands::VtubArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Granulate(args) => commands::granulate(args),
        Command::Train(args) => commands::train(args),
        Command::Predict(args) => commands::predict(args),
        Command::Eval(args) => commands::eval(args),
        Command::Synth(args) => commands::synth(args),
        Command::Noise(args) => commands::noise(args),
        Command::Benchmark(args) => commands::benchmark(args),
        Command::Stats(args) => commands::stats(args),
        Command::Vtub(args) => commands::vtub(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Schema(_) | Error::Io(_) | Error::Json(_) => 1,
        Error::DegenerateData(_)
        | Error::InvalidConfig(_)
        | Error::Unsupported(_)
        | Error::UndefinedStatistic(_)
        | Error::DimensionMismatch { .. } => 2,
        Error::GranulationConvergence { .. } => 3,
        Error::SolverConvergence { .. }
        | Error::NotPositiveDefinite
        | Error::IndefiniteDiagonal { .. }
        | Error::OracleTooLarge { .. } => 4,
    }
}
