//! Synonym lookup used when matching predictions against gold labels.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::wordnet::WordNetDb;

#[derive(Debug, Error)]
pub enum SynonymError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed synonym fixture {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error(transparent)]
    WordNet(#[from] super::wordnet::WordNetError),
}

enum Source {
    /// No expansion: every word is only its own synonym.
    Identity,
    /// Fixed table, typically from a JSON fixture.
    Table(HashMap<String, BTreeSet<String>>),
    /// Synsets of a lexical database, restricted to single words.
    WordNet(WordNetDb),
}

/// Deterministic word -> synonym-set lookup. The set always contains the word
/// itself.
pub struct SynonymProvider {
    source: Source,
}

impl SynonymProvider {
    /// A provider with no expansion at all.
    pub fn identity() -> Self {
        SynonymProvider {
            source: Source::Identity,
        }
    }

    /// Builds a fixed table from `(word, synonyms)` pairs; everything is
    /// lowercased.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (String, Vec<String>)>,
    {
        let mut table: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (word, synonyms) in pairs {
            let entry = table.entry(word.trim().to_lowercase()).or_default();
            for synonym in synonyms {
                entry.insert(synonym.trim().to_lowercase());
            }
        }
        SynonymProvider {
            source: Source::Table(table),
        }
    }

    /// Loads a JSON fixture of shape `{"word": ["synonym", ...]}`.
    pub fn from_json_file(path: &Path) -> Result<Self, SynonymError> {
        let content = std::fs::read_to_string(path).map_err(|source| SynonymError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let raw: HashMap<String, Vec<String>> =
            serde_json::from_str(&content).map_err(|e| SynonymError::Fixture {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        Ok(Self::from_pairs(raw))
    }

    /// Backs lookups with a WordNet database directory (`index.*`/`data.*`
    /// files). Synonyms are the union of all synsets containing the word,
    /// across parts of speech, restricted to single words.
    pub fn from_wordnet_dir(dir: &Path) -> Result<Self, SynonymError> {
        Ok(SynonymProvider {
            source: Source::WordNet(WordNetDb::load(dir)?),
        })
    }

    /// All synonyms of `word`, always including `word` itself (lowercased).
    pub fn lookup(&self, word: &str) -> BTreeSet<String> {
        let word = word.trim().to_lowercase();
        let mut set = match &self.source {
            Source::Identity => BTreeSet::new(),
            Source::Table(table) => table.get(&word).cloned().unwrap_or_default(),
            Source::WordNet(db) => db.synonyms(&word),
        };
        set.insert(word);
        set
    }

    /// Short description for report provenance.
    pub fn describe(&self) -> &'static str {
        match &self.source {
            Source::Identity => "identity",
            Source::Table(_) => "table",
            Source::WordNet(_) => "wordnet",
        }
    }

    /// Whether lookups can return anything beyond the word itself.
    pub fn expands(&self) -> bool {
        !matches!(self.source, Source::Identity)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_reflexive() {
        let provider = SynonymProvider::identity();
        assert!(provider.lookup("hot").contains("hot"));
        let provider =
            SynonymProvider::from_pairs(vec![("hot".to_string(), vec!["warm".to_string()])]);
        assert!(provider.lookup("hot").contains("hot"));
        assert!(provider.lookup("warm").contains("warm"));
    }

    #[test]
    fn table_lookup_is_case_insensitive() {
        let provider =
            SynonymProvider::from_pairs(vec![("Hot".to_string(), vec!["Warm".to_string()])]);
        let set = provider.lookup("HOT");
        assert!(set.contains("warm"));
    }

    #[test]
    fn json_fixture_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("synonyms.json");
        std::fs::write(&path, r#"{"hot": ["warm", "burning"]}"#).unwrap();
        let provider = SynonymProvider::from_json_file(&path).unwrap();
        let set = provider.lookup("hot");
        assert!(set.contains("warm") && set.contains("burning") && set.contains("hot"));
        assert!(provider.expands());
    }
}
