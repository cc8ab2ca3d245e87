//! `stc`: simile triple completion from the command line.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    build_ant::BuildAntArgs, diversity::DiversityArgs, evaluate::EvaluateArgs,
    finetune::FinetuneArgs, pattern_search::PatternSearchArgs, predict::PredictArgs,
    split_norms::SplitNormsArgs,
};

#[derive(Parser)]
#[command(
    name = "stc",
    version,
    about = "Complete simile triples by probing a masked language model",
    long_about = "Complete simile triples (tenor, attribute, vehicle) by probing a masked \
                  language model with hand-designed patterns. Missing attribute = simile \
                  interpretation; missing vehicle = simile generation."
)]
struct Cli {
    /// Worker threads for parallel stages (0 = one per core). Results do not
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a norms TSV and split it into train/test files
    SplitNorms(SplitNormsArgs),
    /// Build a masked-sentence training set from a parsed corpus
    BuildAntDataset(BuildAntArgs),
    /// Run secondary MLM training from a manifest
    Finetune(FinetuneArgs),
    /// Complete one triple and print ranked candidates
    Predict(PredictArgs),
    /// Evaluate every pattern subset on the train split
    PatternSearch(PatternSearchArgs),
    /// Score the test split and emit MRR and R@K rows
    Evaluate(EvaluateArgs),
    /// Emit the diversity p@K table and common-word percentages
    DiversityReport(DiversityArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
        {
            eprintln!("error: cannot configure {} workers: {e}", cli.workers);
            return ExitCode::from(2);
        }
    }

    let result = match &cli.command {
        Command::SplitNorms(args) => commands::split_norms::run(args),
        Command::BuildAntDataset(args) => commands::build_ant::run(args),
        Command::Finetune(args) => commands::finetune::run(args),
        Command::Predict(args) => commands::predict::run(args),
        Command::PatternSearch(args) => commands::pattern_search::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::DiversityReport(args) => commands::diversity::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
