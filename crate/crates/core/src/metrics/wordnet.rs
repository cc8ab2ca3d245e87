//! Minimal reader for the classic WordNet database layout.
//!
//! Only what synonym lookup needs is parsed: `index.<pos>` maps lemmas to
//! synset offsets and `data.<pos>` maps offsets to member words. Collocations
//! (underscore-joined lemmas) are dropped from results, and the `(a)`/`(p)`/
//! `(ip)` adjective markers are stripped.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("no index/data file pair found under {0}")]
    NoDatabaseFiles(PathBuf),
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

const POS_FILES: [&str; 4] = ["noun", "verb", "adj", "adv"];

/// In-memory index over a WordNet dictionary directory.
pub struct WordNetDb {
    /// lemma -> (pos file slot, synset offset) pairs
    index: HashMap<String, Vec<(usize, u64)>>,
    /// per pos file: synset offset -> member words
    data: Vec<HashMap<u64, Vec<String>>>,
}

impl WordNetDb {
    pub fn load(dir: &Path) -> Result<Self, WordNetError> {
        let mut index: HashMap<String, Vec<(usize, u64)>> = HashMap::new();
        let mut data = Vec::new();
        let mut found_any = false;

        for pos in POS_FILES {
            let index_path = dir.join(format!("index.{pos}"));
            let data_path = dir.join(format!("data.{pos}"));
            let slot = data.len();
            if !index_path.exists() || !data_path.exists() {
                continue;
            }
            found_any = true;
            parse_index(&index_path, slot, &mut index)?;
            data.push(parse_data(&data_path)?);
        }
        if !found_any {
            return Err(WordNetError::NoDatabaseFiles(dir.to_path_buf()));
        }
        Ok(WordNetDb { index, data })
    }

    /// Union of the member words of every synset containing `word`, across
    /// all loaded parts of speech. Single words only, lowercased.
    pub fn synonyms(&self, word: &str) -> BTreeSet<String> {
        let lemma = word.trim().to_lowercase().replace(' ', "_");
        let mut out = BTreeSet::new();
        if let Some(entries) = self.index.get(&lemma) {
            for &(slot, offset) in entries {
                if let Some(words) = self.data[slot].get(&offset) {
                    for member in words {
                        if !member.contains('_') {
                            out.insert(member.clone());
                        }
                    }
                }
            }
        }
        out
    }

    pub fn contains(&self, word: &str) -> bool {
        let lemma = word.trim().to_lowercase().replace(' ', "_");
        self.index.contains_key(&lemma)
    }

    /// All indexed lemmas that are single words, lowercased.
    pub fn single_word_lemmas(&self) -> impl Iterator<Item = &str> {
        self.index
            .keys()
            .filter(|lemma| !lemma.contains('_'))
            .map(String::as_str)
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, WordNetError> {
    let content = std::fs::read_to_string(path).map_err(|source| WordNetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(content.lines().map(str::to_string).collect())
}

fn parse_index(
    path: &Path,
    slot: usize,
    index: &mut HashMap<String, Vec<(usize, u64)>>,
) -> Result<(), WordNetError> {
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        // license header lines start with whitespace
        if line.starts_with(' ') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |message: String| WordNetError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        if fields.len() < 6 {
            return Err(parse_err(format!(
                "index line needs at least 6 fields, found {}",
                fields.len()
            )));
        }
        let lemma = fields[0].to_lowercase();
        let synset_cnt: usize = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad synset_cnt `{}`", fields[2])))?;
        if fields.len() < synset_cnt {
            return Err(parse_err(format!(
                "expected {synset_cnt} trailing offsets, line has {} fields",
                fields.len()
            )));
        }
        let offsets = &fields[fields.len() - synset_cnt..];
        let entry = index.entry(lemma).or_default();
        for offset in offsets {
            let offset: u64 = offset
                .parse()
                .map_err(|_| parse_err(format!("bad synset offset `{offset}`")))?;
            entry.push((slot, offset));
        }
    }
    Ok(())
}

fn strip_adjective_marker(word: &str) -> &str {
    match word.find('(') {
        Some(i) if word.ends_with(')') => &word[..i],
        _ => word,
    }
}

fn parse_data(path: &Path) -> Result<HashMap<u64, Vec<String>>, WordNetError> {
    let mut map = HashMap::new();
    for (lineno, line) in read_lines(path)?.iter().enumerate() {
        if line.starts_with(' ') || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |message: String| WordNetError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        if fields.len() < 5 {
            return Err(parse_err(format!(
                "data line needs at least 5 fields, found {}",
                fields.len()
            )));
        }
        let offset: u64 = fields[0]
            .parse()
            .map_err(|_| parse_err(format!("bad synset offset `{}`", fields[0])))?;
        let w_cnt = usize::from_str_radix(fields[3], 16)
            .map_err(|_| parse_err(format!("bad word count `{}`", fields[3])))?;
        if w_cnt == 0 || fields.len() < 4 + 2 * w_cnt {
            return Err(parse_err(format!(
                "expected {w_cnt} word/lex_id pairs after field 4"
            )));
        }
        let words: Vec<String> = (0..w_cnt)
            .map(|i| {
                strip_adjective_marker(fields[4 + 2 * i])
                    .to_lowercase()
                    .to_string()
            })
            .collect();
        map.insert(offset, words);
    }
    Ok(map)
}
