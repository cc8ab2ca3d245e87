//! Run configuration: one JSON or TOML file driving the pipeline commands.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stc_core::completion::EmbeddingTable;
use stc_core::metrics::SynonymProvider;
use stc_core::patterns::{PatternId, PatternRegistry};
use stc_core::scorer::{ModelConfig, TaskVocabulary};
use stc_core::triples::{load_norms, LabeledPair, TaskType};

pub fn default_ks() -> Vec<usize> {
    vec![5, 10, 15, 25, 50]
}

fn default_seed() -> u64 {
    42
}

/// Vocabulary files per task: adjectives for SI, nouns for SG.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VocabPaths {
    #[serde(default)]
    pub si: Option<PathBuf>,
    #[serde(default)]
    pub sg: Option<PathBuf>,
}

/// Train/test split files in the norms TSV format.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DataPaths {
    #[serde(default)]
    pub train: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
}

/// Which patterns prediction and evaluation use.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PatternChoice {
    /// Every pattern applicable to the task.
    All,
    /// An explicit id list.
    Fixed { ids: Vec<String> },
    /// Search all subsets on the train split first, then use the best one.
    Search { objective: String },
}

impl Default for PatternChoice {
    fn default() -> Self {
        PatternChoice::All
    }
}

/// Vehicle filter settings for SG completions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FilterConfig {
    pub enabled: bool,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub embedding_path: Option<PathBuf>,
}

/// Synonym provider selection for the evaluation metrics.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynonymConfig {
    Identity,
    Json { path: PathBuf },
    Wordnet { dir: PathBuf },
}

impl Default for SynonymConfig {
    fn default() -> Self {
        SynonymConfig::Identity
    }
}

/// Everything a run needs; flags may override individual fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub vocab: VocabPaths,
    #[serde(default)]
    pub patterns: PatternChoice,
    #[serde(default)]
    pub data: DataPaths,
    #[serde(default = "default_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub filter: Option<FilterConfig>,
    #[serde(default)]
    pub synonyms: SynonymConfig,
    pub output_dir: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Extra patterns appended to the built-in registry.
    #[serde(default)]
    pub pattern_extensions: Option<PathBuf>,
}

impl RunConfig {
    /// Loads a JSON (default) or TOML (`.toml`) config file.
    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = if path.extension().and_then(|e| e.to_str()) == Some("toml") {
            toml::from_str(&content)
                .with_context(|| format!("malformed TOML config {}", path.display()))?
        } else {
            serde_json::from_str(&content)
                .with_context(|| format!("malformed JSON config {}", path.display()))?
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks path existence and invariants up front.
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() {
            bail!("ks must not be empty");
        }
        if !self.ks.windows(2).all(|w| w[0] < w[1]) {
            bail!("ks must be sorted strictly ascending, got {:?}", self.ks);
        }
        let mut paths: Vec<(&str, &PathBuf)> = Vec::new();
        if let Some(p) = &self.vocab.si {
            paths.push(("vocab.si", p));
        }
        if let Some(p) = &self.vocab.sg {
            paths.push(("vocab.sg", p));
        }
        if let Some(p) = &self.data.train {
            paths.push(("data.train", p));
        }
        if let Some(p) = &self.data.test {
            paths.push(("data.test", p));
        }
        if let Some(p) = &self.pattern_extensions {
            paths.push(("pattern_extensions", p));
        }
        if let Some(filter) = &self.filter {
            if let Some(p) = &filter.embedding_path {
                paths.push(("filter.embedding_path", p));
            }
            if filter.enabled && filter.embedding_path.is_none() {
                bail!("filter.enabled requires filter.embedding_path");
            }
            if let Some(t) = filter.threshold {
                if !(-1.0..=1.0).contains(&t) {
                    bail!("filter.threshold {t} lies outside [-1, 1]");
                }
            }
        }
        match &self.synonyms {
            SynonymConfig::Json { path } => paths.push(("synonyms.path", path)),
            SynonymConfig::Wordnet { dir } => paths.push(("synonyms.dir", dir)),
            SynonymConfig::Identity => {}
        }
        if self.model.backend == stc_core::scorer::BackendKind::Mock {
            let p = PathBuf::from(&self.model.identifier);
            if !p.exists() {
                bail!("model.identifier {} does not exist", p.display());
            }
        }
        for (name, path) in paths {
            if !path.exists() {
                bail!("{name} path {} does not exist", path.display());
            }
        }
        Ok(())
    }

    pub fn registry(&self) -> Result<PatternRegistry> {
        match &self.pattern_extensions {
            Some(path) => PatternRegistry::with_extensions(path)
                .with_context(|| format!("loading pattern extensions {}", path.display())),
            None => Ok(PatternRegistry::standard()),
        }
    }

    pub fn vocabulary(&self, task: TaskType) -> Result<TaskVocabulary> {
        let path = match task {
            TaskType::Si => self.vocab.si.as_ref(),
            TaskType::Sg => self.vocab.sg.as_ref(),
        }
        .with_context(|| format!("config has no vocabulary path for the {task} task"))?;
        TaskVocabulary::from_file(task, path)
            .with_context(|| format!("loading vocabulary {}", path.display()))
    }

    pub fn synonym_provider(&self) -> Result<SynonymProvider> {
        match &self.synonyms {
            SynonymConfig::Identity => Ok(SynonymProvider::identity()),
            SynonymConfig::Json { path } => SynonymProvider::from_json_file(path)
                .with_context(|| format!("loading synonym fixture {}", path.display())),
            SynonymConfig::Wordnet { dir } => SynonymProvider::from_wordnet_dir(dir)
                .with_context(|| format!("loading wordnet db {}", dir.display())),
        }
    }

    pub fn train_pairs(&self) -> Result<Vec<LabeledPair>> {
        let path = self
            .data
            .train
            .as_ref()
            .context("config has no data.train path")?;
        // split files are already frequency-filtered
        Ok(load_norms(path, 1)?)
    }

    pub fn test_pairs(&self) -> Result<Vec<LabeledPair>> {
        let path = self
            .data
            .test
            .as_ref()
            .context("config has no data.test path")?;
        Ok(load_norms(path, 1)?)
    }

    /// The fixed pattern set for a task, or `None` when the config asks for a
    /// search.
    pub fn fixed_pattern_ids(
        &self,
        task: TaskType,
        registry: &PatternRegistry,
    ) -> Result<Option<BTreeSet<PatternId>>> {
        match &self.patterns {
            PatternChoice::All => Ok(Some(
                registry
                    .applicable(task)
                    .iter()
                    .map(|p| p.id().clone())
                    .collect(),
            )),
            PatternChoice::Fixed { ids } => {
                let mut set = BTreeSet::new();
                for id in ids {
                    set.insert(
                        id.parse::<PatternId>()
                            .map_err(|e| anyhow::anyhow!("bad pattern id `{id}`: {e}"))?,
                    );
                }
                if set.is_empty() {
                    bail!("patterns.ids must not be empty");
                }
                Ok(Some(set))
            }
            PatternChoice::Search { .. } => Ok(None),
        }
    }

    pub fn embeddings(&self) -> Result<Option<EmbeddingTable<f64>>> {
        match &self.filter {
            Some(filter) if filter.enabled => {
                let path = filter
                    .embedding_path
                    .as_ref()
                    .context("filter.enabled requires filter.embedding_path")?;
                let table = EmbeddingTable::load(path)
                    .with_context(|| format!("loading embeddings {}", path.display()))?;
                Ok(Some(table))
            }
            _ => Ok(None),
        }
    }
}
