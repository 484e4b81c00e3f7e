//! `davir` — learnability scoring, subset selection, and evaluation for
//! causal-LM post-training data.
//!
//! Exit codes: 0 success, 2 usage error, 3 input validation failure,
//! 4 I/O failure. Failures print one machine-parseable line to stderr:
//! `davir: error: <class>: <message>`.

mod commands;
mod logging;
mod manifest;
mod output;

use clap::{Parser, Subcommand};
use davir_core::ErrorClass;

#[derive(Parser)]
#[command(
    name = "davir",
    version,
    about = "Learnability scoring and core-set selection for post-training data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a character n-gram base model on a corpus
    ToylmFit(commands::toylm::FitArgs),
    /// Interpolate a fitted model toward a training corpus
    ToylmFinetune(commands::toylm::FinetuneArgs),
    /// Dump per-response-token NLLs (and optionally entropies) for a corpus
    ToylmScore(commands::toylm::ScoreArgs),
    /// Join losses with a corpus and compute learnability scores
    Score(commands::score::ScoreArgs),
    /// Correlate a per-document statistic against response length
    Diagnose(commands::diagnose::DiagnoseArgs),
    /// Select a subset of documents by score
    Select(commands::select::SelectArgs),
    /// Assemble a mixed corpus from full and selected components
    Mix(commands::mix::MixArgs),
    /// Evaluate preference objectives over a preference file
    Dpo(commands::dpo::DpoArgs),
    /// Win statistics, bootstrap intervals, and selection comparisons
    Eval(commands::eval::EvalArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ToylmFit(args) => commands::toylm::fit(args),
        Command::ToylmFinetune(args) => commands::toylm::finetune(args),
        Command::ToylmScore(args) => commands::toylm::score(args),
        Command::Score(args) => commands::score::run(args),
        Command::Diagnose(args) => commands::diagnose::run(args),
        Command::Select(args) => commands::select::run(args),
        Command::Mix(args) => commands::mix::run(args),
        Command::Dpo(args) => commands::dpo::run(args),
        Command::Eval(args) => commands::eval::run(args),
    };
    if let Err(err) = result {
        let (class, code) = match err.class() {
            ErrorClass::Validation => ("validation", 3),
            ErrorClass::Io => ("io", 4),
        };
        eprintln!("davir: error: {class}: {err}");
        std::process::exit(code);
    }
}
