//! Streaming CoNLL-U reader yielding parsed sentences with amod relations.
//!
//! Corpora are parsed offline with any universal-dependencies parser; the
//! builder consumes the resulting `.conllu` file. A malformed sentence block
//! is reported as a parse failure for that sentence only and the stream
//! continues.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use super::{AmodRelation, AntError, ParsedSentence};

/// Iterator over the sentence blocks of a CoNLL-U file.
pub struct ConlluReader {
    lines: Lines<BufReader<std::fs::File>>,
    lineno: usize,
    done: bool,
}

impl ConlluReader {
    pub fn open(path: &Path) -> Result<Self, AntError> {
        let file = std::fs::File::open(path).map_err(|source| AntError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(ConlluReader {
            lines: BufReader::new(file).lines(),
            lineno: 0,
            done: false,
        })
    }

    /// Convenience: parse a whole file eagerly.
    pub fn read_all(path: &Path) -> Result<Vec<Result<ParsedSentence, String>>, AntError> {
        Ok(Self::open(path)?.collect())
    }
}

impl Iterator for ConlluReader {
    type Item = Result<ParsedSentence, String>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut block: Vec<(usize, String)> = Vec::new();
        loop {
            match self.lines.next() {
                Some(Ok(line)) => {
                    self.lineno += 1;
                    if line.trim().is_empty() {
                        if block.is_empty() {
                            continue; // leading blank lines
                        }
                        break;
                    }
                    block.push((self.lineno, line));
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(format!("read error: {e}")));
                }
                None => {
                    self.done = true;
                    if block.is_empty() {
                        return None;
                    }
                    break;
                }
            }
        }
        Some(parse_block(&block))
    }
}

fn parse_block(block: &[(usize, String)]) -> Result<ParsedSentence, String> {
    let mut tokens: Vec<String> = Vec::new();
    // conllu id -> position in `tokens`
    let mut positions: HashMap<u64, usize> = HashMap::new();
    // (dependent position, head id, line) for amod rows
    let mut amod_rows: Vec<(usize, u64)> = Vec::new();

    for (lineno, line) in block {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            return Err(format!(
                "line {lineno}: expected at least 8 tab-separated fields, found {}",
                fields.len()
            ));
        }
        let id_field = fields[0];
        // skip multiword-token ranges (1-2) and empty nodes (1.1)
        if id_field.contains('-') || id_field.contains('.') {
            continue;
        }
        let id: u64 = id_field
            .parse()
            .map_err(|_| format!("line {lineno}: bad token id `{id_field}`"))?;
        let position = tokens.len();
        positions.insert(id, position);
        tokens.push(fields[1].to_string());

        let deprel = fields[7];
        if deprel == "amod" || deprel.starts_with("amod:") {
            let head: u64 = fields[6]
                .parse()
                .map_err(|_| format!("line {lineno}: bad head `{}`", fields[6]))?;
            if head == 0 {
                return Err(format!("line {lineno}: amod relation cannot attach to root"));
            }
            amod_rows.push((position, head));
        }
    }

    if tokens.is_empty() {
        return Err("sentence block contains no token rows".to_string());
    }

    let mut amods = Vec::with_capacity(amod_rows.len());
    for (dependent, head_id) in amod_rows {
        let noun = *positions
            .get(&head_id)
            .ok_or_else(|| format!("amod head id {head_id} not present in sentence"))?;
        amods.push(AmodRelation {
            adjective: dependent,
            noun,
        });
    }
    Ok(ParsedSentence { tokens, amods })
}
