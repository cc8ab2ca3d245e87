//! Automatic evaluation: prediction diversity, mean reciprocal rank, and
//! synonym-expanded top-K correctness.

mod synonyms;
mod wordnet;

pub use synonyms::SynonymProvider;
pub use wordnet::WordNetDb;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;
use crate::triples::{LabeledPair, TaskType};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no records to evaluate")]
    EmptyRecords,
    #[error("record `{record}` has {got} predictions but k={needed} requires at least {needed}")]
    TooFewPredictions {
        record: String,
        needed: usize,
        got: usize,
    },
    #[error("record `{record}` has an empty prediction list")]
    EmptyPredictions { record: String },
    #[error("record `{record}` contains duplicate prediction `{word}`")]
    DuplicatePrediction { record: String, word: String },
    #[error("unknown objective `{0}`; expected `mrr` or `r@K`")]
    UnknownObjective(String),
}

/// One evaluated test instance: the gold pair, the task, and the model's
/// ranked predictions for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pair: LabeledPair,
    task: TaskType,
    predictions: Vec<String>,
}

impl EvalRecord {
    pub fn new(
        pair: LabeledPair,
        task: TaskType,
        predictions: Vec<String>,
    ) -> Result<Self, MetricError> {
        let record = format!("{}~{}", pair.tenor(), pair.vehicle());
        let mut seen = HashSet::new();
        for word in &predictions {
            if !seen.insert(word.as_str()) {
                return Err(MetricError::DuplicatePrediction {
                    record,
                    word: word.clone(),
                });
            }
        }
        Ok(EvalRecord {
            pair,
            task,
            predictions,
        })
    }

    pub fn pair(&self) -> &LabeledPair {
        &self.pair
    }

    pub fn task(&self) -> TaskType {
        self.task
    }

    pub fn predictions(&self) -> &[String] {
        &self.predictions
    }

    /// Identifier used in error messages.
    pub fn name(&self) -> String {
        format!("{}~{}", self.pair.tenor(), self.pair.vehicle())
    }

    /// The gold words predictions are matched against: the annotated
    /// attributes for SI, the vehicle for SG.
    pub fn gold_labels(&self) -> Vec<&str> {
        match self.task {
            TaskType::Si => self.pair.attributes().collect(),
            TaskType::Sg => vec![self.pair.vehicle()],
        }
    }

    fn require_k(&self, k: usize) -> Result<(), MetricError> {
        if self.predictions.len() < k {
            return Err(MetricError::TooFewPredictions {
                record: self.name(),
                needed: k,
                got: self.predictions.len(),
            });
        }
        Ok(())
    }
}

fn check_records(records: &[EvalRecord], k: usize) -> Result<(), MetricError> {
    if k == 0 {
        return Err(MetricError::ZeroK);
    }
    if records.is_empty() {
        return Err(MetricError::EmptyRecords);
    }
    for record in records {
        record.require_k(k)?;
    }
    Ok(())
}

/// Prediction diversity: the number of distinct words across all records'
/// top-k prefixes, divided by `k * N`.
pub fn p_at_k<F: Real>(records: &[EvalRecord], k: usize) -> Result<F, MetricError> {
    check_records(records, k)?;
    let mut unique: HashSet<&str> = HashSet::new();
    for record in records {
        for word in &record.predictions[..k] {
            unique.insert(word);
        }
    }
    let numerator = F::from_usize(unique.len()).unwrap();
    let denominator = F::from_usize(k * records.len()).unwrap();
    Ok(numerator / denominator)
}

/// Whether a predicted word counts as correct: it must be one of the gold
/// labels or one of their synonyms.
pub fn is_correct(word: &str, labels: &[&str], synonyms: &SynonymProvider) -> bool {
    labels
        .iter()
        .any(|label| synonyms.lookup(label).contains(word))
}

/// Mean reciprocal rank of the first correct prediction, zero for records
/// where nothing matches.
pub fn mrr<F: Real>(records: &[EvalRecord], synonyms: &SynonymProvider) -> Result<F, MetricError> {
    if records.is_empty() {
        return Err(MetricError::EmptyRecords);
    }
    for record in records {
        if record.predictions.is_empty() {
            return Err(MetricError::EmptyPredictions {
                record: record.name(),
            });
        }
    }
    let mut total = F::zero();
    for record in records {
        let labels = record.gold_labels();
        let reciprocal = record
            .predictions
            .iter()
            .position(|word| is_correct(word, &labels, synonyms))
            .map(|index| F::one() / F::from_usize(index + 1).unwrap())
            .unwrap_or_else(F::zero);
        total = total + reciprocal;
    }
    Ok(total / F::from_usize(records.len()).unwrap())
}

/// Mean over records of (correct predictions in the top k) / k, with synonym
/// expansion. Named R@K after the convention of the evaluation it reproduces,
/// although the denominator is k.
pub fn r_at_k<F: Real>(
    records: &[EvalRecord],
    k: usize,
    synonyms: &SynonymProvider,
) -> Result<F, MetricError> {
    check_records(records, k)?;
    let mut total = F::zero();
    for record in records {
        let labels = record.gold_labels();
        let correct = record.predictions[..k]
            .iter()
            .filter(|word| is_correct(word, &labels, synonyms))
            .count();
        total = total + F::from_usize(correct).unwrap() / F::from_usize(k).unwrap();
    }
    Ok(total / F::from_usize(records.len()).unwrap())
}

/// For each probe word, the percentage of records whose top-k predictions
/// contain it.
pub fn common_word_report<F: Real>(
    records: &[EvalRecord],
    probe_words: &[String],
    k: usize,
) -> Result<BTreeMap<String, F>, MetricError> {
    check_records(records, k)?;
    let n = F::from_usize(records.len()).unwrap();
    let hundred = F::from_f64_lossy(100.0);
    let mut out = BTreeMap::new();
    for probe in probe_words {
        let probe = probe.trim().to_lowercase();
        if probe.is_empty() {
            continue;
        }
        let hits = records
            .iter()
            .filter(|r| r.predictions[..k].iter().any(|w| *w == probe))
            .count();
        out.insert(probe, hundred * F::from_usize(hits).unwrap() / n);
    }
    Ok(out)
}

/// Ranking objective used by the pattern search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    Mrr,
    RAtK(usize),
}

impl Objective {
    pub fn evaluate<F: Real>(
        &self,
        records: &[EvalRecord],
        synonyms: &SynonymProvider,
    ) -> Result<F, MetricError> {
        match self {
            Objective::Mrr => mrr(records, synonyms),
            Objective::RAtK(k) => r_at_k(records, *k, synonyms),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Mrr => write!(f, "mrr"),
            Objective::RAtK(k) => write!(f, "r@{k}"),
        }
    }
}

impl FromStr for Objective {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        if lower == "mrr" {
            return Ok(Objective::Mrr);
        }
        if let Some(k) = lower.strip_prefix("r@") {
            if let Ok(k) = k.parse::<usize>() {
                if k >= 1 {
                    return Ok(Objective::RAtK(k));
                }
            }
        }
        Err(MetricError::UnknownObjective(s.to_string()))
    }
}

/// One row of a metric report file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReportRow {
    pub metric: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub value: f64,
    pub split: String,
    pub model: String,
    pub pattern_set: Vec<String>,
    pub synonym_expansion: bool,
}
