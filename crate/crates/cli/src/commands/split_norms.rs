//! `stc split-norms`: filter a norms TSV and split it into train/test files.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use stc_core::triples::{load_norms, split};

use super::{compute, usage, CmdResult};
use crate::output::RunDir;

#[derive(Args, Debug, Serialize)]
pub struct SplitNormsArgs {
    /// Norms TSV: tenor<TAB>attribute<TAB>vehicle<TAB>frequency
    #[arg(long)]
    pub input: PathBuf,
    /// Keep labels with frequency >= this value
    #[arg(long, default_value_t = 5)]
    pub min_frequency: u32,
    /// Split seed; the same seed always gives the same split
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of pairs assigned to the test side
    #[arg(long)]
    pub test_fraction: f64,
    /// Directory for the run output
    #[arg(long)]
    pub output_dir: PathBuf,
}

pub fn run(args: &SplitNormsArgs) -> CmdResult {
    if !args.input.exists() {
        return Err(usage(anyhow::anyhow!(
            "input {} does not exist",
            args.input.display()
        )));
    }
    let pairs = load_norms(&args.input, args.min_frequency).map_err(compute)?;
    let dataset = split(&pairs, args.seed, args.test_fraction).map_err(usage)?;

    let run_dir = RunDir::create(&args.output_dir, "split-norms", args).map_err(compute)?;
    let manifest = dataset
        .write_to_dir(run_dir.path(), args.seed, args.test_fraction)
        .map_err(compute)?;

    println!(
        "split {} pairs into {} train / {} test under {}",
        pairs.len(),
        manifest.train_pairs,
        manifest.test_pairs,
        run_dir.path().display()
    );
    Ok(())
}
