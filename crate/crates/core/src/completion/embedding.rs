//! Static word embeddings for tenor/vehicle similarity filtering.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::real::{cosine, Real};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: vector has {got} dimensions, table uses {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("embedding file contains no vectors")]
    Empty,
}

/// Word -> dense vector table with a single fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable<F: Real = f64> {
    dim: usize,
    vectors: HashMap<String, Vec<F>>,
}

impl<F: Real> EmbeddingTable<F> {
    /// Builds a table from `(word, vector)` pairs. All vectors must share one
    /// dimension; later duplicates of a word replace earlier ones.
    pub fn from_pairs<I>(pairs: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (String, Vec<F>)>,
    {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (i, (word, vector)) in pairs.into_iter().enumerate() {
            let expected = *dim.get_or_insert(vector.len());
            if vector.len() != expected {
                return Err(EmbeddingError::DimensionMismatch {
                    line: i + 1,
                    expected,
                    got: vector.len(),
                });
            }
            vectors.insert(word.trim().to_lowercase(), vector);
        }
        match dim {
            Some(dim) if dim > 0 => Ok(EmbeddingTable { dim, vectors }),
            _ => Err(EmbeddingError::Empty),
        }
    }

    /// Reads the word2vec text format: `word v1 v2 ...` per line. An optional
    /// first line of exactly two integers (`count dim`) is treated as a
    /// header and skipped.
    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let content = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&content)
    }

    pub fn parse(content: &str) -> Result<Self, EmbeddingError> {
        let mut pairs = Vec::new();
        for (lineno, line) in content.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-empty line has a first field");
            let values: Vec<&str> = fields.collect();
            if lineno == 0
                && values.len() == 1
                && word.parse::<usize>().is_ok()
                && values[0].parse::<usize>().is_ok()
            {
                continue; // word2vec
            }
            if values.is_empty() {
                return Err(EmbeddingError::Parse {
                    line: lineno + 1,
                    message: "expected at least one vector component".into(),
                });
            }
            let mut vector = Vec::with_capacity(values.len());
            for value in values {
                let parsed: f64 = value.parse().map_err(|_| EmbeddingError::Parse {
                    line: lineno + 1,
                    message: format!("bad vector component `{value}`"),
                })?;
                vector.push(F::from_f64_lossy(parsed));
            }
            pairs.push((word.to_string(), vector));
        }
        let table = Self::from_pairs(pairs)?;
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[F]> {
        self.vectors
            .get(&word.trim().to_lowercase())
            .map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    /// Vector for a possibly multiword phrase: the mean of the vectors of its
    /// known words, or `None` when none of them is in the table.
    pub fn phrase_vector(&self, phrase: &str) -> Option<Vec<F>> {
        let mut sum = vec![F::zero(); self.dim];
        let mut known = 0usize;
        for word in phrase.split_whitespace() {
            if let Some(vector) = self.get(word) {
                for (s, v) in sum.iter_mut().zip(vector) {
                    *s = *s + *v;
                }
                known += 1;
            }
        }
        if known == 0 {
            return None;
        }
        let n = F::from_usize(known).unwrap();
        for s in &mut sum {
            *s = *s / n;
        }
        Some(sum)
    }

    /// Cosine similarity between two phrases, `None` when either phrase is
    /// unknown or has a zero-norm vector.
    pub fn phrase_cosine(&self, a: &str, b: &str) -> Option<F> {
        let va = self.phrase_vector(a)?;
        let vb = self.phrase_vector(b)?;
        cosine(&va, &vb)
    }
}
