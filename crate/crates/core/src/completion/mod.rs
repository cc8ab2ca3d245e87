//! The prediction engine: pattern ensembling, exhaustive pattern-subset
//! search, vehicle filtering, and the end-to-end completion of a triple.

mod embedding;

pub use embedding::{EmbeddingError, EmbeddingTable};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{is_correct, MetricError, Objective, SynonymProvider};
use crate::patterns::{instantiate, Pattern, PatternError, PatternId, PatternRegistry};
use crate::real::Real;
use crate::scorer::{score, ModelRef, ScoreError, TaskVocabulary};
use crate::triples::{LabeledPair, SimileTriple, TaskType};

/// Probabilities are clamped to this floor before taking logs, so a word that
/// underflows to zero under one pattern cannot veto the whole ensemble.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Exhaustive subset search becomes unreasonable beyond this many patterns.
pub const MAX_SEARCH_PATTERNS: usize = 16;

#[derive(Debug, Error)]
pub enum CompletionError {
    #[error("pattern set is empty")]
    EmptyPatternSet,
    #[error("unknown pattern id `{0}`")]
    UnknownPattern(PatternId),
    #[error("pattern `{pattern}` is not applicable to the {task} task")]
    Inapplicable { pattern: PatternId, task: TaskType },
    #[error("triple is complete; nothing to predict")]
    CompleteTriple,
    #[error("no vocabulary word is scored by every member pattern for `{query}`")]
    NoCommonWords { query: String },
    #[error("dev set is empty")]
    EmptyDevSet,
    #[error("{0} applicable patterns exceed the subset-search limit of {MAX_SEARCH_PATTERNS}")]
    TooManyPatterns(usize),
    #[error("similarity threshold {0} lies outside [-1, 1]")]
    InvalidThreshold(f64),
    #[error("train set is empty")]
    EmptyTrainSet,
    #[error("no train pair has embeddings for both tenor and vehicle")]
    NoScorablePair,
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Averaged log-probabilities over a pattern set, ranked descending with
/// lexicographic tie-breaks. The values are not renormalized: only the
/// ranking is meaningful downstream.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult<F: Real = f64> {
    scores: Vec<(String, F)>,
    pattern_set: Vec<PatternId>,
    triple: SimileTriple,
}

impl<F: Real> EnsembleResult<F> {
    /// `(word, averaged log-probability)` pairs in ranked order.
    pub fn scores(&self) -> &[(String, F)] {
        &self.scores
    }

    pub fn ranked_words(&self) -> impl Iterator<Item = &str> {
        self.scores.iter().map(|(w, _)| w.as_str())
    }

    pub fn score_of(&self, word: &str) -> Option<F> {
        self.scores.iter().find(|(w, _)| w == word).map(|&(_, s)| s)
    }

    pub fn pattern_set(&self) -> &[PatternId] {
        &self.pattern_set
    }

    pub fn triple(&self) -> &SimileTriple {
        &self.triple
    }
}

fn resolve_patterns<'r>(
    registry: &'r PatternRegistry,
    pattern_ids: &BTreeSet<PatternId>,
    task: TaskType,
) -> Result<Vec<&'r Pattern>, CompletionError> {
    if pattern_ids.is_empty() {
        return Err(CompletionError::EmptyPatternSet);
    }
    let mut patterns = Vec::with_capacity(pattern_ids.len());
    for id in pattern_ids {
        let pattern = registry
            .get(id)
            .ok_or_else(|| CompletionError::UnknownPattern(id.clone()))?;
        if !pattern.class().supports(task) {
            return Err(CompletionError::Inapplicable {
                pattern: id.clone(),
                task,
            });
        }
        patterns.push(pattern);
    }
    Ok(patterns)
}

fn floored_log<F: Real>(probability: F, log_probability: F) -> F {
    let floor = F::from_f64_lossy(PROBABILITY_FLOOR);
    if probability >= floor {
        log_probability
    } else {
        floor.ln()
    }
}

/// Averages the log-probability of each vocabulary word across the member
/// patterns. Words any member cannot score are dropped; the result covers the
/// words scored by every member.
pub fn ensemble<F: Real>(
    model: &ModelRef,
    registry: &PatternRegistry,
    triple: &SimileTriple,
    pattern_ids: &BTreeSet<PatternId>,
    vocab: &TaskVocabulary,
) -> Result<EnsembleResult<F>, CompletionError> {
    let task = triple.task().ok_or(CompletionError::CompleteTriple)?;
    let patterns = resolve_patterns(registry, pattern_ids, task)?;
    let member_count = patterns.len();

    let mut sums: HashMap<String, (usize, F)> = HashMap::with_capacity(vocab.len());
    let mut first_query = String::new();
    for pattern in &patterns {
        let query = instantiate(pattern, triple)?;
        if first_query.is_empty() {
            first_query = query.text().to_string();
        }
        let scored = score::<F>(model, &query, vocab)?;
        for entry in scored.entries() {
            let lp = floored_log(entry.probability, entry.log_probability);
            let slot = sums.entry(entry.word.clone()).or_insert((0, F::zero()));
            slot.0 += 1;
            slot.1 = slot.1 + lp;
        }
    }

    let divisor = F::from_usize(member_count).unwrap();
    let mut scores: Vec<(String, F)> = sums
        .into_iter()
        .filter(|&(_, (count, _))| count == member_count)
        .map(|(word, (_, sum))| (word, sum / divisor))
        .collect();
    if scores.is_empty() {
        return Err(CompletionError::NoCommonWords { query: first_query });
    }
    scores.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });

    Ok(EnsembleResult {
        scores,
        pattern_set: pattern_ids.iter().cloned().collect(),
        triple: triple.clone(),
    })
}

/// One evaluated subset in a search report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize",
    deserialize = "F: serde::de::DeserializeOwned"
))]
pub struct SubsetResult<F: Real = f64> {
    pub patterns: Vec<PatternId>,
    pub objective_value: F,
    pub aux: BTreeMap<String, F>,
}

/// Full ranking of every non-empty subset of the applicable patterns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "F: Serialize",
    deserialize = "F: serde::de::DeserializeOwned"
))]
pub struct SearchReport<F: Real = f64> {
    pub task: TaskType,
    pub objective: String,
    pub split: String,
    pub subset_count: usize,
    pub ranked_subsets: Vec<SubsetResult<F>>,
    pub best: Vec<PatternId>,
}

/// Knobs for [`pattern_search`] beyond the objective itself.
pub struct SearchOptions<'a> {
    pub objective: Objective,
    /// Ks for the auxiliary R@K columns of the report. Infeasible Ks (larger
    /// than some record's ranking) are omitted from the report.
    pub aux_ks: &'a [usize],
    pub synonyms: &'a SynonymProvider,
    /// Label recorded in the report for the dev split being searched.
    pub split_label: &'a str,
}

impl<'a> SearchOptions<'a> {
    pub fn new(objective: Objective, synonyms: &'a SynonymProvider) -> Self {
        SearchOptions {
            objective,
            aux_ks: &[5, 10, 15, 25, 50],
            synonyms,
            split_label: "dev",
        }
    }
}

/// Per-query state reused across all subsets: the floored log-probabilities
/// of each vocabulary word under each pattern (NaN marks unscored words), and
/// which vocabulary words count as correct for the query's gold labels.
struct QueryCache<F: Real> {
    log_probs: Vec<Vec<F>>,
    correct: Vec<bool>,
}

fn subset_values<F: Real>(
    caches: &[QueryCache<F>],
    members: &[usize],
    words: &[String],
) -> Result<(Vec<F>, Vec<Vec<usize>>), CompletionError> {
    // per query: ranked word indices, score descending with the same
    // lexicographic tie-break the ensemble uses
    let mut rankings = Vec::with_capacity(caches.len());
    let divisor = F::from_usize(members.len()).unwrap();
    let mut reciprocal_ranks = Vec::with_capacity(caches.len());
    for cache in caches {
        let mut scored: Vec<(usize, F)> = Vec::with_capacity(words.len());
        'word: for word_idx in 0..words.len() {
            let mut sum = F::zero();
            for &member in members {
                let lp = cache.log_probs[member][word_idx];
                if lp.is_nan() {
                    continue 'word;
                }
                sum = sum + lp;
            }
            scored.push((word_idx, sum / divisor));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| words[a.0].cmp(&words[b.0]))
        });
        let ranking: Vec<usize> = scored.into_iter().map(|(i, _)| i).collect();
        let reciprocal = ranking
            .iter()
            .position(|&i| cache.correct[i])
            .map(|index| F::one() / F::from_usize(index + 1).unwrap())
            .unwrap_or_else(F::zero);
        reciprocal_ranks.push(reciprocal);
        rankings.push(ranking);
    }
    Ok((reciprocal_ranks, rankings))
}

/// Evaluates every non-empty subset of the applicable patterns on the dev
/// set and ranks them by the objective. Per-pattern scores are computed once
/// per query and shared across subsets. Ties prefer smaller subsets, then
/// lexicographically earlier id lists.
pub fn pattern_search<F: Real>(
    model: &ModelRef,
    registry: &PatternRegistry,
    dev_set: &[LabeledPair],
    task: TaskType,
    vocab: &TaskVocabulary,
    options: &SearchOptions<'_>,
) -> Result<SearchReport<F>, CompletionError> {
    if dev_set.is_empty() {
        return Err(CompletionError::EmptyDevSet);
    }
    let applicable = registry.applicable(task);
    if applicable.is_empty() {
        return Err(CompletionError::EmptyPatternSet);
    }
    if applicable.len() > MAX_SEARCH_PATTERNS {
        return Err(CompletionError::TooManyPatterns(applicable.len()));
    }
    let n = applicable.len();
    let word_count = vocab.len();

    // one query per SI pair, one per SG label
    let mut queries: Vec<(SimileTriple, Vec<String>)> = Vec::new();
    for pair in dev_set {
        match task {
            TaskType::Si => {
                let gold = pair.attributes().map(str::to_string).collect();
                queries.push((pair.si_triple(), gold));
            }
            TaskType::Sg => {
                for triple in pair.sg_triples() {
                    queries.push((triple, vec![pair.vehicle().to_string()]));
                }
            }
        }
    }

    // fill phase: 9 scorings per query regardless of the subset count
    let word_index: HashMap<&str, usize> = vocab
        .words()
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let caches: Vec<QueryCache<F>> = queries
        .par_iter()
        .map(|(triple, gold)| -> Result<QueryCache<F>, CompletionError> {
            let mut log_probs = Vec::with_capacity(n);
            for pattern in &applicable {
                let query = instantiate(pattern, triple)?;
                let scored = score::<F>(model, &query, vocab)?;
                let mut row = vec![F::nan(); word_count];
                for entry in scored.entries() {
                    let word_idx = word_index[entry.word.as_str()];
                    row[word_idx] = floored_log(entry.probability, entry.log_probability);
                }
                log_probs.push(row);
            }
            let labels: Vec<&str> = gold.iter().map(String::as_str).collect();
            let correct = vocab
                .words()
                .iter()
                .map(|word| is_correct(word, &labels, options.synonyms))
                .collect();
            Ok(QueryCache { log_probs, correct })
        })
        .collect::<Result<_, _>>()?;

    let query_total = F::from_usize(caches.len()).unwrap();
    let masks: Vec<u32> = (1..(1u32 << n)).collect();
    let mut results: Vec<SubsetResult<F>> = masks
        .par_iter()
        .map(|&mask| -> Result<SubsetResult<F>, CompletionError> {
            let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let patterns: Vec<PatternId> =
                members.iter().map(|&i| applicable[i].id().clone()).collect();
            let (reciprocals, rankings) = subset_values(&caches, &members, vocab.words())?;

            for (cache_idx, ranking) in rankings.iter().enumerate() {
                if ranking.is_empty() {
                    return Err(CompletionError::NoCommonWords {
                        query: format!("query #{cache_idx} under {{{}}}", join_ids(&patterns)),
                    });
                }
            }

            let mut aux = BTreeMap::new();
            let mrr_value = {
                let sum = reciprocals
                    .iter()
                    .fold(F::zero(), |acc, &r| acc + r);
                sum / query_total
            };
            aux.insert("mrr".to_string(), mrr_value);
            let min_len = rankings.iter().map(Vec::len).min().unwrap_or(0);
            let recall_at = |k: usize| -> F {
                let mut total = F::zero();
                for (cache, ranking) in caches.iter().zip(&rankings) {
                    let correct = ranking[..k].iter().filter(|&&i| cache.correct[i]).count();
                    total = total + F::from_usize(correct).unwrap() / F::from_usize(k).unwrap();
                }
                total / query_total
            };
            for &k in options.aux_ks {
                if k == 0 || k > min_len {
                    continue;
                }
                aux.insert(format!("r@{k}"), recall_at(k));
            }

            let objective_value = match options.objective {
                Objective::Mrr => mrr_value,
                Objective::RAtK(k) => {
                    if k == 0 || k > min_len {
                        return Err(MetricError::TooFewPredictions {
                            record: format!("subset {{{}}}", join_ids(&patterns)),
                            needed: k,
                            got: min_len,
                        }
                        .into());
                    }
                    *aux
                        .entry(format!("r@{k}"))
                        .or_insert_with(|| recall_at(k))
                }
            };

            Ok(SubsetResult {
                patterns,
                objective_value,
                aux,
            })
        })
        .collect::<Result<_, _>>()?;

    results.sort_by(|a, b| {
        b.objective_value
            .partial_cmp(&a.objective_value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.patterns.len().cmp(&b.patterns.len()))
            .then_with(|| a.patterns.cmp(&b.patterns))
    });
    let best = results[0].patterns.clone();

    Ok(SearchReport {
        task,
        objective: options.objective.to_string(),
        split: options.split_label.to_string(),
        subset_count: results.len(),
        ranked_subsets: results,
        best,
    })
}

fn join_ids(ids: &[PatternId]) -> String {
    ids.iter()
        .map(|id| id.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Outcome of vehicle filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterOutcome {
    /// Surviving candidates, order preserved.
    pub words: Vec<String>,
    /// Candidates removed for being too similar to the tenor.
    pub removed: Vec<String>,
    /// True when the tenor has no embedding and filtering was skipped.
    pub skipped: bool,
}

/// Removes candidates whose cosine similarity to the tenor exceeds the
/// threshold (strictly). Candidates without embeddings are kept; a tenor
/// without any embedding skips filtering entirely and flags the outcome.
pub fn filter_vehicles<F: Real>(
    tenor: &str,
    candidates: &[String],
    embeddings: &EmbeddingTable<F>,
    threshold: F,
) -> Result<FilterOutcome, CompletionError> {
    let t = threshold.to_f64_lossy();
    if !(-1.0..=1.0).contains(&t) {
        return Err(CompletionError::InvalidThreshold(t));
    }
    let tenor_vector = match embeddings.phrase_vector(tenor) {
        Some(v) => v,
        None => {
            return Ok(FilterOutcome {
                words: candidates.to_vec(),
                removed: Vec::new(),
                skipped: true,
            })
        }
    };

    let mut words = Vec::with_capacity(candidates.len());
    let mut removed = Vec::new();
    for candidate in candidates {
        let similar = embeddings
            .get(candidate)
            .and_then(|v| crate::real::cosine(&tenor_vector, v))
            .map(|cos| cos > threshold)
            .unwrap_or(false);
        if similar {
            removed.push(candidate.clone());
        } else {
            words.push(candidate.clone());
        }
    }
    Ok(FilterOutcome {
        words,
        removed,
        skipped: false,
    })
}

/// The maximum tenor/vehicle similarity over the train set; pairs without
/// embeddings on both sides are skipped.
pub fn derive_threshold<F: Real>(
    train: &[LabeledPair],
    embeddings: &EmbeddingTable<F>,
) -> Result<F, CompletionError> {
    if train.is_empty() {
        return Err(CompletionError::EmptyTrainSet);
    }
    let mut best: Option<F> = None;
    for pair in train {
        if let Some(cos) = embeddings.phrase_cosine(pair.tenor(), pair.vehicle()) {
            best = Some(match best {
                Some(b) if b >= cos => b,
                _ => cos,
            });
        }
    }
    best.ok_or(CompletionError::NoScorablePair)
}

/// Optional similarity filter applied to SG completions.
pub struct VehicleFilter<'a, F: Real = f64> {
    pub embeddings: &'a EmbeddingTable<F>,
    pub threshold: F,
}

/// End-to-end result of completing one triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion<F: Real = f64> {
    words: Vec<String>,
    scores: Vec<F>,
    removed: Vec<String>,
    filter_skipped: bool,
}

impl<F: Real> Completion<F> {
    /// The top-k predicted words in ranked order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// `(word, averaged log-probability)` in ranked order.
    pub fn ranked(&self) -> impl Iterator<Item = (&str, F)> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.scores.iter().copied())
    }

    pub fn removed(&self) -> &[String] {
        &self.removed
    }

    pub fn filter_skipped(&self) -> bool {
        self.filter_skipped
    }
}

/// Ensemble, rank, filter (SG only, when configured), then truncate to the
/// top k. Filtering happens before truncation, so k survivors come back
/// whenever the ranking has that many.
pub fn complete<F: Real>(
    model: &ModelRef,
    registry: &PatternRegistry,
    triple: &SimileTriple,
    pattern_ids: &BTreeSet<PatternId>,
    vocab: &TaskVocabulary,
    k: usize,
    filter: Option<&VehicleFilter<'_, F>>,
) -> Result<Completion<F>, CompletionError> {
    if k == 0 {
        return Err(CompletionError::ZeroK);
    }
    let task = triple.task().ok_or(CompletionError::CompleteTriple)?;
    let result = ensemble::<F>(model, registry, triple, pattern_ids, vocab)?;
    let ranked: Vec<String> = result.ranked_words().map(str::to_string).collect();

    let (kept, removed, skipped) = match (task, filter) {
        (TaskType::Sg, Some(filter)) => {
            let outcome =
                filter_vehicles(triple.tenor(), &ranked, filter.embeddings, filter.threshold)?;
            (outcome.words, outcome.removed, outcome.skipped)
        }
        _ => (ranked, Vec::new(), false),
    };

    let words: Vec<String> = kept.into_iter().take(k).collect();
    let scores: Vec<F> = words
        .iter()
        .map(|w| result.score_of(w).expect("ranked word has a score"))
        .collect();
    Ok(Completion {
        words,
        scores,
        removed,
        filter_skipped: skipped,
    })
}
