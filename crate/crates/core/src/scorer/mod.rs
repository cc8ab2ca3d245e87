//! Scoring backends: masked sentence in, probability distribution over a
//! task-specific vocabulary out.
//!
//! Two backends implement the same contract. The mock backend replays logits
//! from a JSON fixture and makes every number in the pipeline exactly
//! reproducible; the pretrained backend adapts a real masked language model
//! through a line-delimited JSON subprocess (see `scripts/mlm_server.py`).

mod mock;
mod pretrained;

pub use mock::MockFixture;
pub use pretrained::PretrainedConfig;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::patterns::MaskedQuery;
use crate::real::{log_softmax, Real};
use crate::triples::TaskType;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("no word in the vocabulary is scoreable for `{query}`")]
    AllWordsUnscoreable { query: String },
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("model identifier must be non-empty")]
    EmptyIdentifier,
}

/// Which backend a model reference points at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Pretrained,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendKind::Mock => write!(f, "mock"),
            BackendKind::Pretrained => write!(f, "pretrained"),
        }
    }
}

/// Raw logit access at the mask position. `None` marks a word the backend
/// cannot score as a single unit.
pub trait MaskBackend: Send + Sync {
    fn mask_logits(&self, sentence: &str, words: &[String]) -> Result<Vec<Option<f64>>, ScoreError>;
}

/// A resolved model: backend handle plus the metadata describing it.
#[derive(Clone)]
pub struct ModelRef {
    kind: BackendKind,
    identifier: String,
    mask_literal: String,
    backend: Arc<dyn MaskBackend>,
}

impl fmt::Debug for ModelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelRef")
            .field("kind", &self.kind)
            .field("identifier", &self.identifier)
            .field("mask_literal", &self.mask_literal)
            .finish()
    }
}

impl ModelRef {
    /// Loads a deterministic mock backend from a JSON fixture.
    pub fn load_mock(path: &Path) -> Result<Self, ScoreError> {
        let fixture = MockFixture::load(path)?;
        Ok(Self::from_fixture_with_identifier(
            fixture,
            path.display().to_string(),
        ))
    }

    /// Wraps an in-memory fixture; handy in tests.
    pub fn from_fixture(fixture: MockFixture) -> Self {
        Self::from_fixture_with_identifier(fixture, "<in-memory>".to_string())
    }

    fn from_fixture_with_identifier(fixture: MockFixture, identifier: String) -> Self {
        let mask_literal = fixture.mask_literal.clone();
        ModelRef {
            kind: BackendKind::Mock,
            identifier,
            mask_literal,
            backend: Arc::new(mock::MockBackend::new(fixture)),
        }
    }

    /// Spawns the pretrained-MLM adapter subprocess described by `config`.
    pub fn pretrained(config: &PretrainedConfig) -> Result<Self, ScoreError> {
        let backend = pretrained::PretrainedBackend::spawn(config)?;
        let mask_literal = config
            .mask_literal
            .clone()
            .unwrap_or_else(|| backend.server_mask_literal().to_string());
        Ok(ModelRef {
            kind: BackendKind::Pretrained,
            identifier: config.model.clone(),
            mask_literal,
            backend: Arc::new(backend),
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn mask_literal(&self) -> &str {
        &self.mask_literal
    }

    pub fn backend(&self) -> &dyn MaskBackend {
        self.backend.as_ref()
    }
}

/// Serializable description of a model, resolvable into a [`ModelRef`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backend: BackendKind,
    pub identifier: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_literal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<String>,
    /// Launch command override for the pretrained adapter subprocess.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
}

impl ModelConfig {
    pub fn mock(path: impl Into<String>) -> Self {
        ModelConfig {
            backend: BackendKind::Mock,
            identifier: path.into(),
            mask_literal: None,
            device: None,
            command: None,
        }
    }

    pub fn resolve(&self) -> Result<ModelRef, ScoreError> {
        if self.identifier.is_empty() {
            return Err(ScoreError::EmptyIdentifier);
        }
        match self.backend {
            BackendKind::Mock => ModelRef::load_mock(Path::new(&self.identifier)),
            BackendKind::Pretrained => ModelRef::pretrained(&PretrainedConfig {
                model: self.identifier.clone(),
                device: self.device.clone().unwrap_or_else(|| "cpu".to_string()),
                command: self.command.clone(),
                mask_literal: self.mask_literal.clone(),
            }),
        }
    }
}

/// The candidate word set a task's distribution is normalized over:
/// adjectives for SI, nouns for SG. Words are distinct and lowercase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskVocabulary {
    task: TaskType,
    words: Vec<String>,
}

impl TaskVocabulary {
    /// Builds a vocabulary, lowercasing and deduplicating while preserving
    /// first occurrence order.
    pub fn new<I, S>(task: TaskType, words: I) -> Result<Self, ScoreError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for word in words {
            let word = word.as_ref().trim().to_lowercase();
            if word.is_empty() {
                continue;
            }
            if seen.insert(word.clone()) {
                out.push(word);
            }
        }
        if out.is_empty() {
            return Err(ScoreError::EmptyVocabulary);
        }
        Ok(TaskVocabulary { task, words: out })
    }

    /// Reads a vocabulary file: UTF-8, one word per line.
    pub fn from_file(task: TaskType, path: &Path) -> Result<Self, ScoreError> {
        let content = std::fs::read_to_string(path).map_err(|source| ScoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::new(task, content.lines())
    }

    pub fn task(&self) -> TaskType {
        self.task
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// One scored vocabulary entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord<F> {
    pub word: String,
    pub probability: F,
    pub log_probability: F,
}

/// The mask-position distribution over a task vocabulary, sorted by
/// probability descending with lexicographic tie-breaks.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidates<F: Real = f64> {
    entries: Vec<ScoredWord<F>>,
    query: MaskedQuery,
    excluded: Vec<String>,
}

impl<F: Real> ScoredCandidates<F> {
    pub fn entries(&self) -> &[ScoredWord<F>] {
        &self.entries
    }

    pub fn query(&self) -> &MaskedQuery {
        &self.query
    }

    /// Vocabulary words the backend could not score, sorted.
    pub fn excluded(&self) -> &[String] {
        &self.excluded
    }

    pub fn probability_of(&self, word: &str) -> Option<F> {
        self.entries
            .iter()
            .find(|e| e.word == word)
            .map(|e| e.probability)
    }

    pub fn log_probability_of(&self, word: &str) -> Option<F> {
        self.entries
            .iter()
            .find(|e| e.word == word)
            .map(|e| e.log_probability)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }
}

/// Scores `query` against `vocab`: backend logits at the mask position,
/// softmax-normalized over the scoreable subset of the vocabulary.
///
/// Words the backend cannot score are excluded from the distribution and
/// recorded in [`ScoredCandidates::excluded`]. If no word is scoreable the
/// call fails.
pub fn score<F: Real>(
    model: &ModelRef,
    query: &MaskedQuery,
    vocab: &TaskVocabulary,
) -> Result<ScoredCandidates<F>, ScoreError> {
    let sentence = query.with_mask_literal(model.mask_literal());
    let logits = model.backend().mask_logits(&sentence, vocab.words())?;
    debug_assert_eq!(logits.len(), vocab.len());

    let mut scored: Vec<(&String, F)> = Vec::with_capacity(vocab.len());
    let mut excluded = Vec::new();
    for (word, logit) in vocab.words().iter().zip(logits) {
        match logit {
            Some(l) => scored.push((word, F::from_f64_lossy(l))),
            None => excluded.push(word.clone()),
        }
    }
    if scored.is_empty() {
        return Err(ScoreError::AllWordsUnscoreable {
            query: query.text().to_string(),
        });
    }
    // canonical word order makes the softmax reduction, and therefore the
    // result, bit-identical under vocabulary permutations
    scored.sort_by(|a, b| a.0.cmp(b.0));
    excluded.sort();

    let raw: Vec<F> = scored.iter().map(|&(_, l)| l).collect();
    let (probs, log_probs) = log_softmax(&raw);
    let mut entries: Vec<ScoredWord<F>> = scored
        .into_iter()
        .zip(probs.into_iter().zip(log_probs))
        .map(|((word, _), (probability, log_probability))| ScoredWord {
            word: word.clone(),
            probability,
            log_probability,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.log_probability
            .partial_cmp(&a.log_probability)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.word.cmp(&b.word))
    });

    Ok(ScoredCandidates {
        entries,
        query: query.clone(),
        excluded,
    })
}

/// The `min(k, entries)` highest-probability words, in ranked order.
pub fn top_k<F: Real>(candidates: &ScoredCandidates<F>, k: usize) -> Vec<String> {
    candidates
        .entries
        .iter()
        .take(k)
        .map(|e| e.word.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{PatternId, Slot};
    use approx::assert_relative_eq;

    fn query(text: &str) -> MaskedQuery {
        MaskedQuery::new(text, Slot::Attribute, PatternId::new("p1").unwrap()).unwrap()
    }

    fn fixture_model(rows: &[(&str, &[(&str, f64)])]) -> ModelRef {
        let mut fixture = MockFixture::with_default_logit(Some(0.0));
        for (text, words) in rows {
            fixture.insert(text, words.iter().map(|&(w, l)| (w.to_string(), Some(l))));
        }
        ModelRef::from_fixture(fixture)
    }

    fn vocab(words: &[&str]) -> TaskVocabulary {
        TaskVocabulary::new(TaskType::Si, words.iter().copied()).unwrap()
    }

    #[test]
    fn softmax_over_fixture_logits() {
        let model = fixture_model(&[(
            "the cloud is as MASK as cotton.",
            &[("soft", 2.0), ("hard", 1.0), ("big", 0.0)],
        )]);
        let q = query("the cloud is as MASK as cotton.");
        let scored: ScoredCandidates = score(&model, &q, &vocab(&["soft", "hard", "big"])).unwrap();
        assert_eq!(
            scored.words().collect::<Vec<_>>(),
            vec!["soft", "hard", "big"]
        );
        assert_relative_eq!(
            scored.probability_of("soft").unwrap(),
            0.6652409557748219,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            scored.probability_of("hard").unwrap(),
            0.24472847105479764,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            scored.probability_of("big").unwrap(),
            0.09003057317038046,
            epsilon = 1e-9
        );
        let total: f64 = scored.entries().iter().map(|e| e.probability).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn equal_logits_give_uniform_distribution() {
        let model = fixture_model(&[("q MASK.", &[("a", 1.0), ("b", 1.0), ("c", 1.0), ("d", 1.0)])]);
        let scored: ScoredCandidates =
            score(&model, &query("q MASK."), &vocab(&["a", "b", "c", "d"])).unwrap();
        for entry in scored.entries() {
            assert_relative_eq!(entry.probability, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn restricting_the_vocabulary_renormalizes() {
        let model = fixture_model(&[(
            "the cloud is as MASK as cotton.",
            &[("soft", 2.0), ("hard", 1.0), ("big", 0.0)],
        )]);
        let q = query("the cloud is as MASK as cotton.");
        let scored: ScoredCandidates = score(&model, &q, &vocab(&["soft", "big"])).unwrap();
        assert_relative_eq!(
            scored.probability_of("soft").unwrap(),
            0.8807970779778824,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            scored.probability_of("big").unwrap(),
            0.11920292202211755,
            epsilon = 1e-9
        );
    }

    #[test]
    fn vocabulary_order_does_not_matter() {
        let model = fixture_model(&[("q MASK.", &[("x", 0.4), ("y", 1.3), ("z", -0.7)])]);
        let a: ScoredCandidates = score(&model, &query("q MASK."), &vocab(&["x", "y", "z"])).unwrap();
        let b: ScoredCandidates = score(&model, &query("q MASK."), &vocab(&["z", "x", "y"])).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn ties_break_lexicographically() {
        let model = fixture_model(&[("q MASK.", &[("b", 1.0), ("a", 1.0)])]);
        let scored: ScoredCandidates = score(&model, &query("q MASK."), &vocab(&["b", "a"])).unwrap();
        assert_eq!(top_k(&scored, 1), vec!["a"]);
    }

    #[test]
    fn top_k_clamps_to_available_entries() {
        let model = fixture_model(&[("q MASK.", &[("a", 2.0), ("b", 1.0), ("c", 0.0)])]);
        let scored: ScoredCandidates =
            score(&model, &query("q MASK."), &vocab(&["a", "b", "c"])).unwrap();
        assert_eq!(top_k(&scored, 2), vec!["a", "b"]);
        assert_eq!(top_k(&scored, 10), vec!["a", "b", "c"]);
    }

    #[test]
    fn unscoreable_words_are_excluded_and_reported() {
        let mut fixture = MockFixture::with_default_logit(Some(0.0));
        fixture.insert(
            "q MASK.",
            vec![
                ("good".to_string(), Some(1.0)),
                ("unusable".to_string(), None),
            ],
        );
        let model = ModelRef::from_fixture(fixture);
        let scored: ScoredCandidates =
            score(&model, &query("q MASK."), &vocab(&["good", "unusable", "other"])).unwrap();
        assert_eq!(scored.excluded(), &["unusable".to_string()]);
        assert!(scored.probability_of("unusable").is_none());
        // "other" falls back to the default logit and stays in
        assert!(scored.probability_of("other").is_some());
    }

    #[test]
    fn all_words_unscoreable_is_an_error() {
        let mut fixture = MockFixture::with_default_logit(None);
        fixture.insert("q MASK.", vec![("bad".to_string(), None)]);
        let model = ModelRef::from_fixture(fixture);
        let err = score::<f64>(&model, &query("q MASK."), &vocab(&["bad", "worse"]));
        assert!(matches!(err, Err(ScoreError::AllWordsUnscoreable { .. })));
    }

    #[test]
    fn excluding_a_word_leaves_other_probabilities_unchanged() {
        let mut with_excluded = MockFixture::with_default_logit(Some(0.0));
        with_excluded.insert(
            "q MASK.",
            vec![
                ("a".to_string(), Some(1.5)),
                ("b".to_string(), Some(0.5)),
                ("c".to_string(), None),
            ],
        );
        let m1 = ModelRef::from_fixture(with_excluded);
        let s1: ScoredCandidates = score(&m1, &query("q MASK."), &vocab(&["a", "b", "c"])).unwrap();

        let m2 = fixture_model(&[("q MASK.", &[("a", 1.5), ("b", 0.5)])]);
        let s2: ScoredCandidates = score(&m2, &query("q MASK."), &vocab(&["a", "b"])).unwrap();

        for word in ["a", "b"] {
            assert_relative_eq!(
                s1.probability_of(word).unwrap(),
                s2.probability_of(word).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn same_query_twice_is_bit_identical() {
        let model = fixture_model(&[("q MASK.", &[("a", 0.123456789), ("b", -3.5)])]);
        let s1: ScoredCandidates = score(&model, &query("q MASK."), &vocab(&["a", "b"])).unwrap();
        let s2: ScoredCandidates = score(&model, &query("q MASK."), &vocab(&["a", "b"])).unwrap();
        assert_eq!(s1.entries(), s2.entries());
    }

    #[test]
    fn vocabulary_deduplicates_and_normalizes() {
        let v = TaskVocabulary::new(TaskType::Si, ["Soft", "soft", " big ", ""]).unwrap();
        assert_eq!(v.words(), &["soft", "big"]);
        assert!(TaskVocabulary::new(TaskType::Si, Vec::<String>::new()).is_err());
    }

    #[test]
    fn scoring_in_f32_approximates_f64() {
        let model = fixture_model(&[("q MASK.", &[("a", 2.0), ("b", 0.0)])]);
        let s32: ScoredCandidates<f32> =
            score(&model, &query("q MASK."), &vocab(&["a", "b"])).unwrap();
        let s64: ScoredCandidates<f64> =
            score(&model, &query("q MASK."), &vocab(&["a", "b"])).unwrap();
        assert_relative_eq!(
            s32.probability_of("a").unwrap() as f64,
            s64.probability_of("a").unwrap(),
            epsilon = 1e-6
        );
    }
}
