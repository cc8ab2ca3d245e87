//! Independent naive reimplementations of the scored math and the automatic
//! metrics. Everything here is a direct transcription of the definitions,
//! computed through different code paths than the library (plain softmax
//! instead of log-sum-exp, brute-force subset enumeration instead of the
//! cached sweep). Used only to cross-check the real implementations.

use std::collections::{BTreeMap, HashMap};

use stc_core::patterns::{instantiate, Pattern, PatternId, PatternRegistry};
use stc_core::scorer::MockFixture;
use stc_core::triples::{LabeledPair, SimileTriple, TaskType};

pub const FLOOR: f64 = 1e-12;

/// Plain softmax, no shifting.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let total: f64 = logits.iter().map(|l| l.exp()).sum();
    logits.iter().map(|l| l.exp() / total).collect()
}

/// Per-word probabilities for one sentence straight from the fixture data:
/// look up each word's logit (falling back to the default), drop unscoreable
/// words, softmax the rest.
pub fn fixture_probabilities(
    fixture: &MockFixture,
    sentence: &str,
    vocab: &[String],
) -> BTreeMap<String, f64> {
    let row = fixture.queries.get(sentence);
    let mut words = Vec::new();
    let mut logits = Vec::new();
    for word in vocab {
        let logit = match row {
            Some(row) => row.get(word).copied().unwrap_or(fixture.default_logit),
            None => fixture.default_logit,
        };
        if let Some(logit) = logit {
            words.push(word.clone());
            logits.push(logit);
        }
    }
    let probs = softmax(&logits);
    words.into_iter().zip(probs).collect()
}

/// Mean of log probabilities over the member patterns, for the words every
/// member scores.
pub fn ensemble_scores(
    fixture: &MockFixture,
    triple: &SimileTriple,
    members: &[&Pattern],
    vocab: &[String],
) -> BTreeMap<String, f64> {
    let per_pattern: Vec<BTreeMap<String, f64>> = members
        .iter()
        .map(|pattern| {
            let query = instantiate(pattern, triple).expect("applicable pattern");
            fixture_probabilities(fixture, query.text(), vocab)
        })
        .collect();
    let mut scores = BTreeMap::new();
    for word in vocab {
        if per_pattern.iter().all(|m| m.contains_key(word)) {
            let sum: f64 = per_pattern
                .iter()
                .map(|m| m[word].max(FLOOR).ln())
                .sum();
            scores.insert(word.clone(), sum / members.len() as f64);
        }
    }
    scores
}

/// Score-descending ranking with lexicographic tie-breaks.
pub fn rank(scores: &BTreeMap<String, f64>) -> Vec<String> {
    let mut entries: Vec<(&String, f64)> = scores.iter().map(|(w, &s)| (w, s)).collect();
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.cmp(b.0))
    });
    entries.into_iter().map(|(w, _)| w.clone()).collect()
}

/// Reflexive synonym table.
pub struct NaiveSynonyms(pub HashMap<String, Vec<String>>);

impl NaiveSynonyms {
    pub fn is_correct(&self, word: &str, labels: &[String]) -> bool {
        labels.iter().any(|label| {
            word == label
                || self
                    .0
                    .get(label)
                    .map(|syns| syns.iter().any(|s| s == word))
                    .unwrap_or(false)
        })
    }
}

/// (gold labels, ranked predictions) per record.
pub type Record = (Vec<String>, Vec<String>);

pub fn mrr(records: &[Record], synonyms: &NaiveSynonyms) -> f64 {
    let mut total = 0.0;
    for (labels, predictions) in records {
        let mut reciprocal = 0.0;
        for (i, word) in predictions.iter().enumerate() {
            if synonyms.is_correct(word, labels) {
                reciprocal = 1.0 / (i as f64 + 1.0);
                break;
            }
        }
        total += reciprocal;
    }
    total / records.len() as f64
}

pub fn r_at_k(records: &[Record], k: usize, synonyms: &NaiveSynonyms) -> f64 {
    let mut total = 0.0;
    for (labels, predictions) in records {
        let correct = predictions[..k]
            .iter()
            .filter(|w| synonyms.is_correct(w, labels))
            .count();
        total += correct as f64 / k as f64;
    }
    total / records.len() as f64
}

pub fn p_at_k(predictions: &[Vec<String>], k: usize) -> f64 {
    let mut unique = std::collections::HashSet::new();
    for preds in predictions {
        for word in &preds[..k] {
            unique.insert(word.clone());
        }
    }
    unique.len() as f64 / (k as f64 * predictions.len() as f64)
}

pub fn common_word_report(
    predictions: &[Vec<String>],
    probes: &[String],
    k: usize,
) -> BTreeMap<String, f64> {
    let n = predictions.len() as f64;
    probes
        .iter()
        .map(|probe| {
            let hits = predictions
                .iter()
                .filter(|preds| preds[..k].contains(probe))
                .count();
            (probe.clone(), 100.0 * hits as f64 / n)
        })
        .collect()
}

/// Objective values for every non-empty pattern subset, recomputed from
/// scratch per subset, ranked by (value desc, subset size, ids).
pub struct NaiveSearch {
    pub ranked: Vec<(Vec<PatternId>, f64)>,
    pub best: Vec<PatternId>,
}

#[allow(clippy::too_many_arguments)]
pub fn pattern_search(
    fixture: &MockFixture,
    registry: &PatternRegistry,
    dev_set: &[LabeledPair],
    task: TaskType,
    vocab: &[String],
    objective_is_mrr: bool,
    objective_k: usize,
    synonyms: &NaiveSynonyms,
) -> NaiveSearch {
    let applicable = registry.applicable(task);
    let n = applicable.len();

    // one (triple, gold labels) query per SI pair, one per SG label
    let mut queries: Vec<(SimileTriple, Vec<String>)> = Vec::new();
    for pair in dev_set {
        match task {
            TaskType::Si => queries.push((
                pair.si_triple(),
                pair.attributes().map(str::to_string).collect(),
            )),
            TaskType::Sg => {
                for triple in pair.sg_triples() {
                    queries.push((triple, vec![pair.vehicle().to_string()]));
                }
            }
        }
    }

    let mut ranked: Vec<(Vec<PatternId>, f64)> = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<&Pattern> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| applicable[i])
            .collect();
        let ids: Vec<PatternId> = members.iter().map(|p| p.id().clone()).collect();

        let records: Vec<Record> = queries
            .iter()
            .map(|(triple, gold)| {
                let scores = ensemble_scores(fixture, triple, &members, vocab);
                (gold.clone(), rank(&scores))
            })
            .collect();
        let value = if objective_is_mrr {
            mrr(&records, synonyms)
        } else {
            r_at_k(&records, objective_k, synonyms)
        };
        ranked.push((ids, value));
    }

    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| a.0.len().cmp(&b.0.len()))
            .then_with(|| a.0.cmp(&b.0))
    });
    let best = ranked[0].0.clone();
    NaiveSearch { ranked, best }
}
