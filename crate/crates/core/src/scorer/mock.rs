//! Deterministic fixture-backed scoring for exact tests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MaskBackend, ScoreError};

fn default_mask_literal() -> String {
    crate::patterns::MASK_MARKER.to_string()
}

/// JSON fixture mapping query sentences to per-word logits.
///
/// ```json
/// {
///   "default_logit": 0.0,
///   "queries": {
///     "the love is as MASK as rose.": {"thorny": 2.0, "unusable": null}
///   }
/// }
/// ```
///
/// Words absent from a query row receive `default_logit`; a `null` logit (or
/// a `null` default) marks the word as unscoreable. Sentences absent from
/// `queries` score every word at the default logit. `mask_literal` defaults
/// to the abstract marker so fixture keys read like instantiated patterns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockFixture {
    pub default_logit: Option<f64>,
    #[serde(default = "default_mask_literal")]
    pub mask_literal: String,
    #[serde(default)]
    pub queries: BTreeMap<String, BTreeMap<String, Option<f64>>>,
}

impl MockFixture {
    pub fn with_default_logit(default_logit: Option<f64>) -> Self {
        MockFixture {
            default_logit,
            mask_literal: default_mask_literal(),
            queries: BTreeMap::new(),
        }
    }

    /// Sets the logits for one query sentence.
    pub fn insert<I>(&mut self, text: &str, words: I)
    where
        I: IntoIterator<Item = (String, Option<f64>)>,
    {
        self.queries
            .insert(text.to_string(), words.into_iter().collect());
    }

    pub fn load(path: &Path) -> Result<Self, ScoreError> {
        let content = std::fs::read_to_string(path).map_err(|source| ScoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let fixture: MockFixture =
            serde_json::from_str(&content).map_err(|e| ScoreError::Fixture {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if fixture.mask_literal.is_empty() {
            return Err(ScoreError::Fixture {
                path: path.to_path_buf(),
                message: "mask_literal must be non-empty".into(),
            });
        }
        Ok(fixture)
    }

    pub fn save(&self, path: &Path) -> Result<(), ScoreError> {
        let content = serde_json::to_string_pretty(self).expect("fixture serializes");
        std::fs::write(path, content).map_err(|source| ScoreError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

pub(super) struct MockBackend {
    fixture: MockFixture,
}

impl MockBackend {
    pub(super) fn new(fixture: MockFixture) -> Self {
        MockBackend { fixture }
    }
}

impl MaskBackend for MockBackend {
    fn mask_logits(
        &self,
        sentence: &str,
        words: &[String],
    ) -> Result<Vec<Option<f64>>, ScoreError> {
        let row = self.fixture.queries.get(sentence);
        Ok(words
            .iter()
            .map(|word| match row {
                Some(row) => row
                    .get(word)
                    .copied()
                    .unwrap_or(self.fixture.default_logit),
                None => self.fixture.default_logit,
            })
            .collect())
    }
}
