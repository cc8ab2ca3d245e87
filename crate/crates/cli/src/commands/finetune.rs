//! `stc finetune`: run secondary MLM training from a manifest.

use std::path::PathBuf;

use clap::Args;

use stc_core::ant::{finetune, FinetuneError, TrainerCommand, TrainingManifest};

use super::{usage, CliError, CmdResult};

#[derive(Args, Debug)]
pub struct FinetuneArgs {
    /// Training manifest JSON
    #[arg(long)]
    pub manifest: PathBuf,
    /// Training backend command (default: python3 scripts/finetune_mlm.py)
    #[arg(long, num_args = 1.., value_delimiter = ' ')]
    pub trainer_cmd: Option<Vec<String>>,
}

pub fn run(args: &FinetuneArgs) -> CmdResult {
    let manifest = TrainingManifest::load(&args.manifest).map_err(usage)?;
    let trainer = match &args.trainer_cmd {
        Some(cmd) => TrainerCommand::new(cmd.clone()).map_err(usage)?,
        None => TrainerCommand::default(),
    };
    let tuned = finetune(&manifest, &trainer).map_err(|e| match e {
        // bad inputs are config problems; a failing backend is a runtime one
        FinetuneError::Backend(_) | FinetuneError::Output { .. } => CliError::Compute(e.into()),
        other => CliError::Usage(other.into()),
    })?;
    println!(
        "{}",
        serde_json::to_string_pretty(&tuned).expect("model config serializes")
    );
    Ok(())
}
