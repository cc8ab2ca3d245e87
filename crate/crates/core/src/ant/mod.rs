//! Adjective-Noun mask Training data: build masked-sentence corpora from
//! adjectival-modifier (amod) dependencies, with a per-word mask cap.
//!
//! Masking only the words joined by amod relations, and capping how often any
//! single word may be masked, steers later fine-tuning away from high-
//! frequency filler words and toward diverse, content-bearing predictions.

mod conllu;
mod finetune;

pub use conllu::ConlluReader;
pub use finetune::{finetune, FinetuneError, TrainerCommand, TrainingManifest};

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::patterns::MASK_MARKER;

/// Per-word mask cap used by the reference corpus.
pub const DEFAULT_MASK_CAP: usize = 5;
/// Sentences must be strictly shorter than this many words.
pub const MAX_SENTENCE_WORDS: usize = 64;
/// Target share of noun masks, matching the reference corpus composition of
/// 68k noun-masked sentences out of 98k.
pub const NOUN_TARGET_RATIO: f64 = 68.0 / 98.0;

#[derive(Debug, Error)]
pub enum AntError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no example survived filtering (seen {seen} sentences)")]
    EmptyDataset { seen: usize },
    #[error("mask cap must be at least 1")]
    ZeroCap,
}

/// Role of the masked word within its amod relation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskedPos {
    Noun,
    Adjective,
}

impl fmt::Display for MaskedPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskedPos::Noun => write!(f, "noun"),
            MaskedPos::Adjective => write!(f, "adjective"),
        }
    }
}

/// One training sentence with a single amod-linked word masked out.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntExample {
    /// Lowercased tokens joined by single spaces, with [`MASK_MARKER`] at
    /// `mask_index`.
    pub text: String,
    pub mask_index: usize,
    pub masked_word: String,
    pub pos: MaskedPos,
}

impl AntExample {
    /// Restores the original (lowercased) sentence.
    pub fn unmasked(&self) -> String {
        let mut tokens: Vec<&str> = self.text.split(' ').collect();
        tokens[self.mask_index] = &self.masked_word;
        tokens.join(" ")
    }
}

/// Counts accompanying a built dataset.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntStats {
    pub noun_masked: usize,
    pub adjective_masked: usize,
    pub per_word: BTreeMap<String, usize>,
}

impl AntStats {
    pub fn max_mask_count(&self) -> usize {
        self.per_word.values().copied().max().unwrap_or(0)
    }
}

/// Sentences kept or dropped while building, as plain counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub seen: usize,
    pub kept: usize,
    pub parser_failures: usize,
    pub too_long: usize,
    pub no_amod: usize,
    pub cap_exhausted: usize,
}

impl fmt::Display for SkipReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sentences seen:    {}", self.seen)?;
        writeln!(f, "examples kept:     {}", self.kept)?;
        writeln!(f, "parser failures:   {}", self.parser_failures)?;
        writeln!(f, "too long (>=64):   {}", self.too_long)?;
        writeln!(f, "no amod relation:  {}", self.no_amod)?;
        write!(f, "mask cap exhausted: {}", self.cap_exhausted)
    }
}

/// The built training set plus its bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AntDataset {
    examples: Vec<AntExample>,
    stats: AntStats,
}

impl AntDataset {
    pub fn examples(&self) -> &[AntExample] {
        &self.examples
    }

    pub fn stats(&self) -> &AntStats {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Writes one JSON object per line: `{text, mask_index, masked_word, pos}`.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        for example in &self.examples {
            serde_json::to_writer(&mut writer, example)?;
            writeln!(writer)?;
        }
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, AntError> {
        let file = std::fs::File::open(path).map_err(|source| AntError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = std::io::BufReader::new(file);
        let mut examples = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| AntError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let example: AntExample =
                serde_json::from_str(&line).map_err(|e| AntError::Format {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: e.to_string(),
                })?;
            examples.push(example);
        }
        if examples.is_empty() {
            return Err(AntError::EmptyDataset { seen: 0 });
        }
        let stats = compute_stats(&examples);
        Ok(AntDataset { examples, stats })
    }
}

fn compute_stats(examples: &[AntExample]) -> AntStats {
    let mut stats = AntStats::default();
    for example in examples {
        match example.pos {
            MaskedPos::Noun => stats.noun_masked += 1,
            MaskedPos::Adjective => stats.adjective_masked += 1,
        }
        *stats.per_word.entry(example.masked_word.clone()).or_insert(0) += 1;
    }
    stats
}

/// One amod relation: the modifying adjective and the noun it modifies, as
/// token indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmodRelation {
    pub adjective: usize,
    pub noun: usize,
}

/// A dependency-parsed sentence as the builder consumes it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    pub tokens: Vec<String>,
    pub amods: Vec<AmodRelation>,
}

/// External dependency-parse provider for plain sentence streams.
pub trait DependencyParser {
    fn parse(&self, sentence: &str) -> Result<ParsedSentence, String>;
}

/// Builds the dataset from an already-parsed sentence stream. Sentences are
/// processed in stream order; per-word mask counts are global and a word is
/// never masked more than `cap` times.
///
/// Per kept sentence exactly one example is emitted, masking either the noun
/// or the adjective of the sentence's first amod relation. The choice tracks
/// [`NOUN_TARGET_RATIO`] deterministically; when the preferred word is at its
/// cap the alternate word is used, and when both are capped the sentence is
/// skipped.
pub fn build_ant_dataset<I>(parsed: I, cap: usize) -> Result<(AntDataset, SkipReport), AntError>
where
    I: IntoIterator<Item = Result<ParsedSentence, String>>,
{
    if cap == 0 {
        return Err(AntError::ZeroCap);
    }
    let mut report = SkipReport::default();
    let mut examples = Vec::new();
    let mut mask_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut noun_masked = 0usize;

    for sentence in parsed {
        report.seen += 1;
        let sentence = match sentence {
            Ok(s) => s,
            Err(_) => {
                report.parser_failures += 1;
                continue;
            }
        };
        if sentence.tokens.is_empty()
            || sentence
                .amods
                .iter()
                .any(|r| r.adjective >= sentence.tokens.len() || r.noun >= sentence.tokens.len())
        {
            report.parser_failures += 1;
            continue;
        }
        if sentence.tokens.len() >= MAX_SENTENCE_WORDS {
            report.too_long += 1;
            continue;
        }
        if sentence.amods.is_empty() {
            report.no_amod += 1;
            continue;
        }

        let tokens: Vec<String> = sentence
            .tokens
            .iter()
            .map(|t| t.to_lowercase())
            .collect();
        // first relation in surface order
        let relation = *sentence
            .amods
            .iter()
            .min_by_key(|r| (r.adjective.min(r.noun), r.adjective.max(r.noun)))
            .unwrap();

        let noun_word = tokens[relation.noun].clone();
        let adjective_word = tokens[relation.adjective].clone();
        let prefer_noun =
            (noun_masked as f64) < NOUN_TARGET_RATIO * (examples.len() as f64 + 1.0);
        let order = if prefer_noun {
            [
                (relation.noun, noun_word.clone(), MaskedPos::Noun),
                (relation.adjective, adjective_word.clone(), MaskedPos::Adjective),
            ]
        } else {
            [
                (relation.adjective, adjective_word.clone(), MaskedPos::Adjective),
                (relation.noun, noun_word.clone(), MaskedPos::Noun),
            ]
        };
        let chosen = order
            .into_iter()
            .find(|(_, word, _)| mask_counts.get(word).copied().unwrap_or(0) < cap);
        let (mask_index, masked_word, pos) = match chosen {
            Some(choice) => choice,
            None => {
                report.cap_exhausted += 1;
                continue;
            }
        };

        let mut masked_tokens: Vec<&str> = tokens.iter().map(String::as_str).collect();
        masked_tokens[mask_index] = MASK_MARKER;
        let text = masked_tokens.join(" ");
        *mask_counts.entry(masked_word.clone()).or_insert(0) += 1;
        if pos == MaskedPos::Noun {
            noun_masked += 1;
        }
        examples.push(AntExample {
            text,
            mask_index,
            masked_word,
            pos,
        });
        report.kept += 1;
    }

    if examples.is_empty() {
        return Err(AntError::EmptyDataset { seen: report.seen });
    }
    let stats = compute_stats(&examples);
    Ok((AntDataset { examples, stats }, report))
}

/// Parses a plain sentence stream with `parser` and builds the dataset;
/// see [`build_ant_dataset`]. Sentences the parser rejects are skipped and
/// counted.
pub fn build_from_corpus<P, I, S>(
    sentences: I,
    parser: &P,
    cap: usize,
) -> Result<(AntDataset, SkipReport), AntError>
where
    P: DependencyParser,
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    build_ant_dataset(
        sentences
            .into_iter()
            .map(|sentence| parser.parse(sentence.as_ref())),
        cap,
    )
}
