//! Hand-designed probe patterns and their instantiation into masked sentences.
//!
//! Twelve templates in four relationship classes turn an incomplete triple
//! into a cloze sentence. Class I references all three slots, class II the
//! attribute and vehicle, class III the tenor and attribute, and class IV the
//! tenor and vehicle. Classes missing the predicted slot are inapplicable:
//! class IV cannot serve SI and class III cannot serve SG.

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::triples::{SimileTriple, TaskType};

/// Placeholder for the masked position in instantiated sentences. Sentences
/// are lowercased, so the uppercase marker can never collide with a word.
/// Scorer backends substitute their own mask literal for it.
pub const MASK_MARKER: &str = "MASK";

/// A slot of the triple that a template may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Tenor,
    Attribute,
    Vehicle,
}

impl Slot {
    /// The `{...}` marker this slot uses inside templates.
    pub fn marker(self) -> &'static str {
        match self {
            Slot::Tenor => "{tenor}",
            Slot::Attribute => "{attribute}",
            Slot::Vehicle => "{vehicle}",
        }
    }

    /// The slot predicted by a task.
    pub fn missing_in(task: TaskType) -> Slot {
        match task {
            TaskType::Si => Slot::Attribute,
            TaskType::Sg => Slot::Vehicle,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Tenor => write!(f, "tenor"),
            Slot::Attribute => write!(f, "attribute"),
            Slot::Vehicle => write!(f, "vehicle"),
        }
    }
}

/// Relationship class of a pattern, determining its slot set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternClass {
    I,
    II,
    III,
    IV,
}

impl PatternClass {
    pub fn slots(self) -> &'static [Slot] {
        match self {
            PatternClass::I => &[Slot::Tenor, Slot::Attribute, Slot::Vehicle],
            PatternClass::II => &[Slot::Attribute, Slot::Vehicle],
            PatternClass::III => &[Slot::Tenor, Slot::Attribute],
            PatternClass::IV => &[Slot::Tenor, Slot::Vehicle],
        }
    }

    /// Classes usable for a task: the predicted slot must be present.
    pub fn supports(self, task: TaskType) -> bool {
        self.slots().contains(&Slot::missing_in(task))
    }
}

impl fmt::Display for PatternClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PatternClass::I => "I",
            PatternClass::II => "II",
            PatternClass::III => "III",
            PatternClass::IV => "IV",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error)]
pub enum PatternError {
    #[error("invalid pattern id `{0}`: must be non-empty without whitespace")]
    InvalidId(String),
    #[error("pattern id `{0}` is reserved for the built-in registry")]
    ReservedId(PatternId),
    #[error("duplicate pattern id `{0}`")]
    DuplicateId(PatternId),
    #[error("pattern `{id}`: template slots do not match class {class} (expected exactly one occurrence of each of {expected:?})")]
    TemplateSlotMismatch {
        id: PatternId,
        class: PatternClass,
        expected: Vec<Slot>,
    },
    #[error("unknown pattern id `{0}`")]
    UnknownPattern(PatternId),
    #[error("pattern `{pattern}` has no {slot} slot and cannot serve this task")]
    InapplicablePattern { pattern: PatternId, slot: Slot },
    #[error("pattern `{pattern}` needs a {slot}, but the triple does not provide one")]
    IncompleteInput { pattern: PatternId, slot: Slot },
    #[error("triple is complete; nothing to predict")]
    CompleteTriple,
    #[error("masked sentence must contain exactly one `{MASK_MARKER}` marker, found {0}")]
    BadMaskCount(usize),
    #[error("failed to read registry {path}: {source}")]
    RegistryIo {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse registry {path}: {source}")]
    RegistryJson {
        path: std::path::PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Identifier of a pattern, `p1`..`p12` for the built-ins.
///
/// Ordering is natural: a trailing number is compared numerically, so
/// `p2 < p10`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternId(String);

impl PatternId {
    pub fn new(id: impl Into<String>) -> Result<Self, PatternError> {
        let id = id.into();
        if id.is_empty() || id.chars().any(|c| c.is_whitespace()) {
            return Err(PatternError::InvalidId(id));
        }
        Ok(PatternId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn sort_key(&self) -> (&str, Option<u64>) {
        let split = self
            .0
            .rfind(|c: char| !c.is_ascii_digit())
            .map_or(0, |i| i + 1);
        let (stem, digits) = self.0.split_at(split);
        (stem, digits.parse().ok())
    }
}

impl Ord for PatternId {
    fn cmp(&self, other: &Self) -> Ordering {
        let (stem_a, num_a) = self.sort_key();
        let (stem_b, num_b) = other.sort_key();
        stem_a
            .cmp(stem_b)
            .then_with(|| match (num_a, num_b) {
                (Some(a), Some(b)) => a.cmp(&b),
                (None, None) => Ordering::Equal,
                (None, Some(_)) => Ordering::Less,
                (Some(_), None) => Ordering::Greater,
            })
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for PatternId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for PatternId {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PatternId::new(s)
    }
}

/// A probe template with `{tenor}`/`{attribute}`/`{vehicle}` slot markers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    id: PatternId,
    class: PatternClass,
    template: String,
}

impl Pattern {
    pub fn new(
        id: PatternId,
        class: PatternClass,
        template: impl Into<String>,
    ) -> Result<Self, PatternError> {
        let template = template.into();
        for slot in [Slot::Tenor, Slot::Attribute, Slot::Vehicle] {
            let expected = usize::from(class.slots().contains(&slot));
            if template.matches(slot.marker()).count() != expected {
                return Err(PatternError::TemplateSlotMismatch {
                    id,
                    class,
                    expected: class.slots().to_vec(),
                });
            }
        }
        Ok(Pattern {
            id,
            class,
            template,
        })
    }

    pub fn id(&self) -> &PatternId {
        &self.id
    }

    pub fn class(&self) -> PatternClass {
        self.class
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    pub fn slots(&self) -> &'static [Slot] {
        self.class.slots()
    }
}

/// A pattern instantiated with a concrete triple: a lowercased sentence with
/// exactly one [`MASK_MARKER`] at the predicted slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskedQuery {
    text: String,
    target_slot: Slot,
    source_pattern: PatternId,
}

impl MaskedQuery {
    pub fn new(
        text: impl Into<String>,
        target_slot: Slot,
        source_pattern: PatternId,
    ) -> Result<Self, PatternError> {
        let text = text.into();
        let count = text.matches(MASK_MARKER).count();
        if count != 1 {
            return Err(PatternError::BadMaskCount(count));
        }
        debug_assert!(matches!(target_slot, Slot::Attribute | Slot::Vehicle));
        Ok(MaskedQuery {
            text,
            target_slot,
            source_pattern,
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn target_slot(&self) -> Slot {
        self.target_slot
    }

    pub fn source_pattern(&self) -> &PatternId {
        &self.source_pattern
    }

    /// The sentence with the backend's own mask literal substituted in.
    pub fn with_mask_literal(&self, literal: &str) -> String {
        self.text.replacen(MASK_MARKER, literal, 1)
    }
}

/// Fills a pattern with an incomplete triple, masking the missing slot.
///
/// The output is fully lowercased raw template filling: known slot words are
/// substituted verbatim, with no article insertion or inflection.
pub fn instantiate(pattern: &Pattern, triple: &SimileTriple) -> Result<MaskedQuery, PatternError> {
    let task = triple.task().ok_or(PatternError::CompleteTriple)?;
    let missing = Slot::missing_in(task);
    if !pattern.slots().contains(&missing) {
        return Err(PatternError::InapplicablePattern {
            pattern: pattern.id.clone(),
            slot: missing,
        });
    }

    let mut text = pattern.template.to_lowercase();
    for &slot in pattern.slots() {
        if slot == missing {
            continue;
        }
        let value = match slot {
            Slot::Tenor => Some(triple.tenor()),
            Slot::Attribute => triple.attribute(),
            Slot::Vehicle => triple.vehicle(),
        }
        .ok_or(PatternError::IncompleteInput {
            pattern: pattern.id.clone(),
            slot,
        })?;
        text = text.replacen(slot.marker(), value, 1);
    }
    text = text.replacen(missing.marker(), MASK_MARKER, 1);
    MaskedQuery::new(text, missing, pattern.id.clone())
}

/// The set of known patterns: the twelve built-ins, optionally extended with
/// user-defined ones. Iteration order is ascending by id.
#[derive(Clone, Debug)]
pub struct PatternRegistry {
    patterns: Vec<Pattern>,
}

const BUILTIN_TEMPLATES: [(&str, PatternClass, &str); 12] = [
    ("p1", PatternClass::I, "The {tenor} is as {attribute} as {vehicle}."),
    ("p2", PatternClass::I, "{vehicle} is very {attribute}, so as {tenor}."),
    ("p3", PatternClass::I, "{tenor} is like {vehicle}, because they are both {attribute}."),
    ("p4", PatternClass::II, "The {attribute} {vehicle}."),
    ("p5", PatternClass::II, "{vehicle} is very {attribute}."),
    ("p6", PatternClass::II, "{vehicle} is {attribute}."),
    ("p7", PatternClass::III, "The {attribute} {tenor}."),
    ("p8", PatternClass::III, "{tenor} is very {attribute}."),
    ("p9", PatternClass::III, "{tenor} is {attribute}."),
    ("p10", PatternClass::IV, "{tenor} is similar to {vehicle}."),
    ("p11", PatternClass::IV, "{tenor} is like {vehicle}."),
    ("p12", PatternClass::IV, "{tenor} and {vehicle} are alike."),
];

/// Entry shape of a registry extension file.
#[derive(Deserialize)]
struct PatternEntry {
    id: String,
    class: PatternClass,
    template: String,
}

impl PatternRegistry {
    /// The twelve built-in patterns.
    pub fn standard() -> Self {
        let patterns = BUILTIN_TEMPLATES
            .iter()
            .map(|&(id, class, template)| {
                Pattern::new(PatternId::new(id).unwrap(), class, template)
                    .expect("built-in templates are well-formed")
            })
            .collect();
        PatternRegistry { patterns }
    }

    /// Shared instance of the built-in registry.
    pub fn builtin() -> &'static PatternRegistry {
        static REGISTRY: OnceLock<PatternRegistry> = OnceLock::new();
        REGISTRY.get_or_init(PatternRegistry::standard)
    }

    /// A registry over an explicit pattern list; ids must be unique.
    pub fn from_patterns(
        patterns: impl IntoIterator<Item = Pattern>,
    ) -> Result<Self, PatternError> {
        let mut out: Vec<Pattern> = Vec::new();
        for pattern in patterns {
            if out.iter().any(|p| p.id == pattern.id) {
                return Err(PatternError::DuplicateId(pattern.id));
            }
            out.push(pattern);
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(PatternRegistry { patterns: out })
    }

    /// Loads a JSON array of `{id, class, template}` entries and appends them
    /// to the built-ins. Entries may not reuse the ids `p1`..`p12`.
    pub fn with_extensions(path: &Path) -> Result<Self, PatternError> {
        let content = std::fs::read_to_string(path).map_err(|source| PatternError::RegistryIo {
            path: path.to_path_buf(),
            source,
        })?;
        let entries: Vec<PatternEntry> =
            serde_json::from_str(&content).map_err(|source| PatternError::RegistryJson {
                path: path.to_path_buf(),
                source,
            })?;
        let mut registry = Self::standard();
        for entry in entries {
            let id = PatternId::new(entry.id)?;
            if BUILTIN_TEMPLATES.iter().any(|&(bid, _, _)| bid == id.as_str()) {
                return Err(PatternError::ReservedId(id));
            }
            if registry.get(&id).is_some() {
                return Err(PatternError::DuplicateId(id));
            }
            registry
                .patterns
                .push(Pattern::new(id, entry.class, entry.template)?);
        }
        registry.patterns.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(registry)
    }

    pub fn get(&self, id: &PatternId) -> Option<&Pattern> {
        self.patterns.iter().find(|p| &p.id == id)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.iter()
    }

    /// Patterns usable for a task, ascending by id. SI excludes class IV,
    /// SG excludes class III.
    pub fn applicable(&self, task: TaskType) -> Vec<&Pattern> {
        let mut out: Vec<&Pattern> = self
            .patterns
            .iter()
            .filter(|p| p.class.supports(task))
            .collect();
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

impl Default for PatternRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

/// Convenience wrapper over [`PatternRegistry::applicable`] on the built-ins.
pub fn applicable_patterns(task: TaskType) -> Vec<&'static Pattern> {
    PatternRegistry::builtin().applicable(task)
}
