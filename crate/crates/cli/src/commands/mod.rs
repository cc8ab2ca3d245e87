//! Command implementations and the machinery they share.

pub mod build_ant;
pub mod diversity;
pub mod evaluate;
pub mod finetune;
pub mod pattern_search;
pub mod predict;
pub mod split_norms;

use std::collections::BTreeSet;
use std::fmt;

use anyhow::{Context, Result};
use rayon::prelude::*;

use stc_core::completion::{complete, derive_threshold, EmbeddingTable, VehicleFilter};
use stc_core::metrics::EvalRecord;
use stc_core::patterns::{PatternId, PatternRegistry};
use stc_core::scorer::ModelRef;
use stc_core::triples::{LabeledPair, TaskType};

use crate::config::RunConfig;

/// Failures split by exit code: 2 for usage/config problems, 1 for
/// computation failures.
#[derive(Debug)]
pub enum CliError {
    Usage(anyhow::Error),
    Compute(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) | CliError::Compute(e) => write!(f, "{e:#}"),
        }
    }
}

pub fn usage<E: Into<anyhow::Error>>(error: E) -> CliError {
    CliError::Usage(error.into())
}

pub fn compute<E: Into<anyhow::Error>>(error: E) -> CliError {
    CliError::Compute(error.into())
}

pub type CmdResult = Result<(), CliError>;

/// Resolved vehicle filter: embeddings plus a threshold, derived from the
/// train split when the config does not pin one.
pub struct ResolvedFilter {
    pub embeddings: EmbeddingTable<f64>,
    pub threshold: f64,
    pub derived: bool,
}

pub fn resolve_filter(config: &RunConfig) -> Result<Option<ResolvedFilter>> {
    let Some(embeddings) = config.embeddings()? else {
        return Ok(None);
    };
    let filter = config.filter.as_ref().expect("embeddings imply filter");
    let (threshold, derived) = match filter.threshold {
        Some(t) => (t, false),
        None => {
            let train = config
                .train_pairs()
                .context("deriving a filter threshold needs data.train")?;
            (derive_threshold(&train, &embeddings)?, true)
        }
    };
    Ok(Some(ResolvedFilter {
        embeddings,
        threshold,
        derived,
    }))
}

/// Runs `complete` over every query of a split: one SI query per pair, one SG
/// query per label. Results are collected in input order regardless of the
/// worker count.
pub fn run_completions(
    model: &ModelRef,
    registry: &PatternRegistry,
    pairs: &[LabeledPair],
    task: TaskType,
    vocab: &stc_core::scorer::TaskVocabulary,
    pattern_ids: &BTreeSet<PatternId>,
    k: usize,
    filter: Option<&ResolvedFilter>,
) -> Result<Vec<EvalRecord>> {
    let queries: Vec<(&LabeledPair, stc_core::triples::SimileTriple)> = pairs
        .iter()
        .flat_map(|pair| match task {
            TaskType::Si => vec![(pair, pair.si_triple())],
            TaskType::Sg => pair.sg_triples().into_iter().map(|t| (pair, t)).collect(),
        })
        .collect();

    queries
        .par_iter()
        .map(|(pair, triple)| {
            let vehicle_filter = filter.map(|f| VehicleFilter {
                embeddings: &f.embeddings,
                threshold: f.threshold,
            });
            let completion = complete::<f64>(
                model,
                registry,
                triple,
                pattern_ids,
                vocab,
                k,
                vehicle_filter.as_ref(),
            )?;
            Ok(EvalRecord::new(
                (*pair).clone(),
                task,
                completion.words().to_vec(),
            )?)
        })
        .collect()
}

/// Human-readable pattern set, e.g. `{p1, p5}`.
pub fn format_pattern_set(ids: &BTreeSet<PatternId>) -> String {
    let inner: Vec<&str> = ids.iter().map(|id| id.as_str()).collect();
    format!("{{{}}}", inner.join(", "))
}

pub fn pattern_set_strings(ids: &BTreeSet<PatternId>) -> Vec<String> {
    ids.iter().map(|id| id.as_str().to_string()).collect()
}

/// Tasks selected by a `--task` flag value.
pub fn tasks_from_flag(flag: &str) -> Result<Vec<TaskType>> {
    match flag.to_ascii_lowercase().as_str() {
        "si" => Ok(vec![TaskType::Si]),
        "sg" => Ok(vec![TaskType::Sg]),
        "both" => Ok(vec![TaskType::Si, TaskType::Sg]),
        other => anyhow::bail!("unknown task `{other}`, expected si, sg, or both"),
    }
}
