//! Simile triples and ingestion of attribute-norm datasets.
//!
//! A simile relates a tenor to a vehicle through a shared attribute. Removing
//! the attribute from a triple gives a simile-interpretation (SI) task;
//! removing the vehicle gives a simile-generation (SG) task. This module also
//! loads the tab-separated norms data, groups it into labeled
//! (tenor, vehicle) pairs, and splits those pairs into train/test sets.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which slot of a triple is missing and therefore predicted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskType {
    /// Simile interpretation: the attribute slot is missing.
    #[serde(rename = "si")]
    Si,
    /// Simile generation: the vehicle slot is missing.
    #[serde(rename = "sg")]
    Sg,
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskType::Si => write!(f, "si"),
            TaskType::Sg => write!(f, "sg"),
        }
    }
}

impl std::str::FromStr for TaskType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "si" => Ok(TaskType::Si),
            "sg" => Ok(TaskType::Sg),
            other => Err(format!("unknown task `{other}`, expected `si` or `sg`")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TripleError {
    #[error("tenor must be non-empty")]
    EmptyTenor,
    #[error("{0} must be non-empty when present")]
    EmptySlot(&'static str),
    #[error("at most one of attribute/vehicle may be missing")]
    TwoSlotsMissing,
}

/// Lowercases and strips surrounding whitespace; multiword phrases are kept
/// verbatim.
pub(crate) fn normalize(text: &str) -> String {
    text.trim().to_lowercase()
}

/// A (tenor, attribute, vehicle) triple with at most one slot missing.
///
/// A triple with one empty slot is "incomplete" and defines a task: missing
/// attribute is SI, missing vehicle is SG.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SimileTriple {
    tenor: String,
    attribute: Option<String>,
    vehicle: Option<String>,
}

impl SimileTriple {
    pub fn new(
        tenor: &str,
        attribute: Option<&str>,
        vehicle: Option<&str>,
    ) -> Result<Self, TripleError> {
        let tenor = normalize(tenor);
        if tenor.is_empty() {
            return Err(TripleError::EmptyTenor);
        }
        let attribute = match attribute {
            Some(a) => {
                let a = normalize(a);
                if a.is_empty() {
                    return Err(TripleError::EmptySlot("attribute"));
                }
                Some(a)
            }
            None => None,
        };
        let vehicle = match vehicle {
            Some(v) => {
                let v = normalize(v);
                if v.is_empty() {
                    return Err(TripleError::EmptySlot("vehicle"));
                }
                Some(v)
            }
            None => None,
        };
        if attribute.is_none() && vehicle.is_none() {
            return Err(TripleError::TwoSlotsMissing);
        }
        Ok(SimileTriple {
            tenor,
            attribute,
            vehicle,
        })
    }

    /// An SI-incomplete triple: the attribute is to be predicted.
    pub fn interpretation(tenor: &str, vehicle: &str) -> Result<Self, TripleError> {
        Self::new(tenor, None, Some(vehicle))
    }

    /// An SG-incomplete triple: the vehicle is to be predicted.
    pub fn generation(tenor: &str, attribute: &str) -> Result<Self, TripleError> {
        Self::new(tenor, Some(attribute), None)
    }

    pub fn complete(tenor: &str, attribute: &str, vehicle: &str) -> Result<Self, TripleError> {
        Self::new(tenor, Some(attribute), Some(vehicle))
    }

    pub fn tenor(&self) -> &str {
        &self.tenor
    }

    pub fn attribute(&self) -> Option<&str> {
        self.attribute.as_deref()
    }

    pub fn vehicle(&self) -> Option<&str> {
        self.vehicle.as_deref()
    }

    /// The task defined by the missing slot, or `None` for a complete triple.
    pub fn task(&self) -> Option<TaskType> {
        match (&self.attribute, &self.vehicle) {
            (None, Some(_)) => Some(TaskType::Si),
            (Some(_), None) => Some(TaskType::Sg),
            (Some(_), Some(_)) => None,
            (None, None) => unreachable!("rejected at construction"),
        }
    }

    pub fn is_incomplete(&self) -> bool {
        self.task().is_some()
    }

    /// Fills the missing slot, yielding a complete triple.
    pub fn filled(&self, word: &str) -> Result<Self, TripleError> {
        match self.task() {
            Some(TaskType::Si) => {
                Self::complete(&self.tenor, word, self.vehicle.as_deref().unwrap())
            }
            Some(TaskType::Sg) => {
                Self::complete(&self.tenor, self.attribute.as_deref().unwrap(), word)
            }
            None => Ok(self.clone()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PairError {
    #[error("tenor must be non-empty")]
    EmptyTenor,
    #[error("vehicle must be non-empty")]
    EmptyVehicle,
    #[error("a labeled pair needs at least one label")]
    NoLabels,
    #[error("label `{0}` must be non-empty")]
    EmptyAttribute(String),
    #[error("label `{0}` has frequency 0; frequencies start at 1")]
    ZeroFrequency(String),
    #[error("duplicate attribute `{0}` within one pair")]
    DuplicateAttribute(String),
}

/// A gold attribute with the number of annotators that proposed it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Label {
    pub attribute: String,
    pub frequency: u32,
}

/// A (tenor, vehicle) pair with its annotated attributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    tenor: String,
    vehicle: String,
    labels: Vec<Label>,
}

impl LabeledPair {
    pub fn new(
        tenor: &str,
        vehicle: &str,
        labels: impl IntoIterator<Item = (String, u32)>,
    ) -> Result<Self, PairError> {
        let tenor = normalize(tenor);
        if tenor.is_empty() {
            return Err(PairError::EmptyTenor);
        }
        let vehicle = normalize(vehicle);
        if vehicle.is_empty() {
            return Err(PairError::EmptyVehicle);
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for (attribute, frequency) in labels {
            let attribute = normalize(&attribute);
            if attribute.is_empty() {
                return Err(PairError::EmptyAttribute(attribute));
            }
            if frequency == 0 {
                return Err(PairError::ZeroFrequency(attribute));
            }
            if !seen.insert(attribute.clone()) {
                return Err(PairError::DuplicateAttribute(attribute));
            }
            out.push(Label {
                attribute,
                frequency,
            });
        }
        if out.is_empty() {
            return Err(PairError::NoLabels);
        }
        Ok(LabeledPair {
            tenor,
            vehicle,
            labels: out,
        })
    }

    pub fn tenor(&self) -> &str {
        &self.tenor
    }

    pub fn vehicle(&self) -> &str {
        &self.vehicle
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|l| l.attribute.as_str())
    }

    /// The single SI query for this pair: predict the attribute.
    pub fn si_triple(&self) -> SimileTriple {
        SimileTriple::interpretation(&self.tenor, &self.vehicle)
            .expect("pair fields are validated non-empty")
    }

    /// One SG query per label: predict the vehicle given each attribute.
    pub fn sg_triples(&self) -> Vec<SimileTriple> {
        self.labels
            .iter()
            .map(|l| {
                SimileTriple::generation(&self.tenor, &l.attribute)
                    .expect("pair fields are validated non-empty")
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum NormsError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("min_frequency must be at least 1")]
    InvalidMinFrequency,
    #[error("empty dataset: no label survives min_frequency={min_frequency}")]
    EmptyDataset { min_frequency: u32 },
}

/// Loads a norms file of `tenor<TAB>attribute<TAB>vehicle<TAB>frequency`
/// records, grouping rows by (tenor, vehicle) in file order and keeping only
/// labels with `frequency >= min_frequency`.
///
/// Lines starting with `#` and blank lines are ignored. Pairs whose labels all
/// fall below the threshold are dropped.
pub fn load_norms(path: &Path, min_frequency: u32) -> Result<Vec<LabeledPair>, NormsError> {
    let content = fs::read_to_string(path).map_err(|source| NormsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_norms(&content, min_frequency)
}

/// Parses norms records from an in-memory string; see [`load_norms`].
pub fn parse_norms(content: &str, min_frequency: u32) -> Result<Vec<LabeledPair>, NormsError> {
    if min_frequency == 0 {
        return Err(NormsError::InvalidMinFrequency);
    }
    // (tenor, vehicle) -> index into `order`, with labels accumulated in file order
    let mut index: HashMap<(String, String), usize> = HashMap::new();
    let mut order: Vec<((String, String), Vec<Label>)> = Vec::new();

    for (lineno, raw) in content.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 4 {
            return Err(NormsError::Parse {
                line,
                message: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let tenor = normalize(fields[0]);
        let attribute = normalize(fields[1]);
        let vehicle = normalize(fields[2]);
        if tenor.is_empty() || attribute.is_empty() || vehicle.is_empty() {
            return Err(NormsError::Parse {
                line,
                message: "tenor, attribute, and vehicle must be non-empty".into(),
            });
        }
        let frequency: u32 = fields[3].trim().parse().map_err(|_| NormsError::Parse {
            line,
            message: format!("frequency `{}` is not a positive integer", fields[3].trim()),
        })?;
        if frequency == 0 {
            return Err(NormsError::Parse {
                line,
                message: "frequency must be at least 1".into(),
            });
        }

        let key = (tenor, vehicle);
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            order.push((key, Vec::new()));
            order.len() - 1
        });
        let labels = &mut order[slot].1;
        if labels.iter().any(|l| l.attribute == attribute) {
            return Err(NormsError::Parse {
                line,
                message: format!("duplicate attribute `{attribute}` for this pair"),
            });
        }
        labels.push(Label {
            attribute,
            frequency,
        });
    }

    let mut pairs = Vec::new();
    for ((tenor, vehicle), labels) in order {
        let surviving: Vec<Label> = labels
            .into_iter()
            .filter(|l| l.frequency >= min_frequency)
            .collect();
        if surviving.is_empty() {
            continue;
        }
        pairs.push(LabeledPair {
            tenor,
            vehicle,
            labels: surviving,
        });
    }
    if pairs.is_empty() {
        return Err(NormsError::EmptyDataset { min_frequency });
    }
    Ok(pairs)
}

/// Serializes pairs back to the tab-separated norms format, one label per row.
pub fn write_norms<W: Write>(pairs: &[LabeledPair], mut writer: W) -> std::io::Result<()> {
    for pair in pairs {
        for label in &pair.labels {
            writeln!(
                writer,
                "{}\t{}\t{}\t{}",
                pair.tenor, label.attribute, pair.vehicle, label.frequency
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("need at least 2 pairs to split, got {0}")]
    TooFewPairs(usize),
    #[error("test_fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
}

/// Train/test partition of labeled pairs. No (tenor, vehicle) pair appears on
/// both sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitDataset {
    pub train: Vec<LabeledPair>,
    pub test: Vec<LabeledPair>,
}

/// Provenance record written next to split files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub test_fraction: f64,
    pub train_pairs: usize,
    pub test_pairs: usize,
    pub train_labels: usize,
    pub test_labels: usize,
}

/// Deterministically partitions pairs into train/test by (tenor, vehicle)
/// pair. The same seed and fraction always produce the same split; sizes are
/// within one pair of `test_fraction * pairs.len()`.
pub fn split(
    pairs: &[LabeledPair],
    seed: u64,
    test_fraction: f64,
) -> Result<SplitDataset, SplitError> {
    if pairs.len() < 2 {
        return Err(SplitError::TooFewPairs(pairs.len()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SplitError::InvalidFraction(test_fraction));
    }
    let n = pairs.len();
    let test_n = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let test_set: std::collections::HashSet<usize> = indices[..test_n].iter().copied().collect();

    let mut train = Vec::with_capacity(n - test_n);
    let mut test = Vec::with_capacity(test_n);
    for (i, pair) in pairs.iter().enumerate() {
        if test_set.contains(&i) {
            test.push(pair.clone());
        } else {
            train.push(pair.clone());
        }
    }
    Ok(SplitDataset { train, test })
}

impl SplitDataset {
    pub fn manifest(&self, seed: u64, test_fraction: f64) -> SplitManifest {
        SplitManifest {
            seed,
            test_fraction,
            train_pairs: self.train.len(),
            test_pairs: self.test.len(),
            train_labels: self.train.iter().map(|p| p.labels.len()).sum(),
            test_labels: self.test.iter().map(|p| p.labels.len()).sum(),
        }
    }

    /// Writes `train.tsv`, `test.tsv`, and `manifest.json` under `dir`.
    pub fn write_to_dir(
        &self,
        dir: &Path,
        seed: u64,
        test_fraction: f64,
    ) -> std::io::Result<SplitManifest> {
        fs::create_dir_all(dir)?;
        let mut train_file = fs::File::create(dir.join("train.tsv"))?;
        write_norms(&self.train, &mut train_file)?;
        let mut test_file = fs::File::create(dir.join("test.tsv"))?;
        write_norms(&self.test, &mut test_file)?;
        let manifest = self.manifest(seed, test_fraction);
        fs::write(
            dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)?,
        )?;
        Ok(manifest)
    }
}
