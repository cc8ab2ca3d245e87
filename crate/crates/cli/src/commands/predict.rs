//! `stc predict`: complete one triple and print ranked candidates.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use stc_core::completion::{complete, VehicleFilter};
use stc_core::patterns::PatternId;
use stc_core::triples::{SimileTriple, TaskType};

use super::{compute, format_pattern_set, resolve_filter, usage, CmdResult};
use crate::config::RunConfig;
use crate::output::RunDir;

#[derive(Args, Debug, Serialize)]
pub struct PredictArgs {
    /// Run configuration (JSON or TOML)
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub tenor: String,
    /// Present for SG (the vehicle is predicted)
    #[arg(long)]
    pub attribute: Option<String>,
    /// Present for SI (the attribute is predicted)
    #[arg(long)]
    pub vehicle: Option<String>,
    /// How many candidates to return
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    /// Override the config's pattern set, e.g. `p1,p5`
    #[arg(long, value_delimiter = ',')]
    pub patterns: Option<Vec<String>>,
}

#[derive(Serialize)]
struct PredictionReport {
    task: TaskType,
    tenor: String,
    attribute: Option<String>,
    vehicle: Option<String>,
    pattern_set: Vec<String>,
    k: usize,
    candidates: Vec<Candidate>,
    removed_by_filter: Vec<String>,
    filter_skipped: bool,
}

#[derive(Serialize)]
struct Candidate {
    rank: usize,
    word: String,
    score: f64,
}

pub fn run(args: &PredictArgs) -> CmdResult {
    let config = RunConfig::load(&args.config).map_err(usage)?;
    let triple = match (&args.attribute, &args.vehicle) {
        (None, Some(vehicle)) => SimileTriple::interpretation(&args.tenor, vehicle),
        (Some(attribute), None) => SimileTriple::generation(&args.tenor, attribute),
        _ => {
            return Err(usage(anyhow::anyhow!(
                "exactly one of --attribute / --vehicle must be given; the missing one is predicted"
            )))
        }
    }
    .map_err(usage)?;
    let task = triple.task().expect("one slot is missing");
    if args.k == 0 {
        return Err(usage(anyhow::anyhow!("k must be at least 1")));
    }

    let registry = config.registry().map_err(usage)?;
    let vocab = config.vocabulary(task).map_err(usage)?;
    let pattern_ids: BTreeSet<PatternId> = match &args.patterns {
        Some(ids) => ids
            .iter()
            .map(|id| id.parse::<PatternId>())
            .collect::<Result<_, _>>()
            .map_err(usage)?,
        None => config
            .fixed_pattern_ids(task, &registry)
            .map_err(usage)?
            .context(
                "config uses patterns.mode = search; run `stc pattern-search` first and pass \
                 --patterns with the winning subset",
            )
            .map_err(usage)?,
    };

    let model = config.model.resolve().map_err(usage)?;
    let filter = resolve_filter(&config).map_err(usage)?;
    let vehicle_filter = filter.as_ref().map(|f| VehicleFilter {
        embeddings: &f.embeddings,
        threshold: f.threshold,
    });

    let completion = complete::<f64>(
        &model,
        &registry,
        &triple,
        &pattern_ids,
        &vocab,
        args.k,
        vehicle_filter.as_ref(),
    )
    .map_err(compute)?;

    println!(
        "{} completion for tenor `{}` with patterns {}",
        task,
        args.tenor,
        format_pattern_set(&pattern_ids)
    );
    let candidates: Vec<Candidate> = completion
        .ranked()
        .enumerate()
        .map(|(i, (word, score))| Candidate {
            rank: i + 1,
            word: word.to_string(),
            score,
        })
        .collect();
    for candidate in &candidates {
        println!(
            "{:>3}  {:<20} {:.6}",
            candidate.rank, candidate.word, candidate.score
        );
    }
    if !completion.removed().is_empty() {
        println!("filtered out: {}", completion.removed().join(", "));
    }
    if completion.filter_skipped() {
        println!("note: tenor has no embedding; vehicle filtering was skipped");
    }

    let report = PredictionReport {
        task,
        tenor: args.tenor.clone(),
        attribute: args.attribute.clone(),
        vehicle: args.vehicle.clone(),
        pattern_set: super::pattern_set_strings(&pattern_ids),
        k: args.k,
        candidates,
        removed_by_filter: completion.removed().to_vec(),
        filter_skipped: completion.filter_skipped(),
    };
    let run_dir = RunDir::create(&config.output_dir, "predict", &config).map_err(compute)?;
    run_dir.write_json("prediction.json", &report).map_err(compute)?;
    Ok(())
}
