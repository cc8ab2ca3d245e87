//! Secondary masked-language-model training over a built dataset.
//!
//! The heavy lifting is delegated to a training backend subprocess (by
//! default `python3 scripts/finetune_mlm.py`), which receives the resolved
//! manifest path and writes trained weights to the manifest's output
//! directory. A zero-epoch manifest short-circuits and returns the base
//! model untouched.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scorer::{BackendKind, ModelConfig};

#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("dataset {path} is unreadable: {message}")]
    UnreadableDataset { path: PathBuf, message: String },
    #[error("base model is unreadable: {0}")]
    UnreadableModel(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("failed to prepare output dir {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("training backend failed: {0}")]
    Backend(String),
}

/// Hyperparameters and paths for one training run. The defaults are the
/// reference recipe: Adam, learning rate 5e-5, batch size 32, max sequence
/// length 64, 3 epochs, seed 42, no warmup, no weight decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub dataset: PathBuf,
    pub optimizer: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_sequence_length: usize,
    pub epochs: usize,
    pub seed: u64,
    pub warmup_steps: usize,
    pub weight_decay: f64,
    pub base_model: ModelConfig,
    pub output_dir: PathBuf,
}

impl TrainingManifest {
    pub fn new(dataset: PathBuf, base_model: ModelConfig, output_dir: PathBuf) -> Self {
        TrainingManifest {
            dataset,
            optimizer: "adam".to_string(),
            learning_rate: 5e-5,
            batch_size: 32,
            max_sequence_length: 64,
            epochs: 3,
            seed: 42,
            warmup_steps: 0,
            weight_decay: 0.0,
            base_model,
            output_dir,
        }
    }

    pub fn load(path: &Path) -> Result<Self, FinetuneError> {
        let content = std::fs::read_to_string(path).map_err(|e| {
            FinetuneError::InvalidManifest(format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&content)
            .map_err(|e| FinetuneError::InvalidManifest(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), FinetuneError> {
        let content = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, content).map_err(|source| FinetuneError::Output {
            path: path.to_path_buf(),
            source,
        })
    }

    fn validate(&self) -> Result<(), FinetuneError> {
        if self.learning_rate <= 0.0 {
            return Err(FinetuneError::InvalidManifest(
                "learning_rate must be positive".into(),
            ));
        }
        if self.batch_size == 0 || self.max_sequence_length == 0 {
            return Err(FinetuneError::InvalidManifest(
                "batch_size and max_sequence_length must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Launch command for the training backend.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainerCommand(Vec<String>);

impl TrainerCommand {
    pub fn new(command: Vec<String>) -> Result<Self, FinetuneError> {
        if command.is_empty() {
            return Err(FinetuneError::InvalidManifest(
                "trainer command must not be empty".into(),
            ));
        }
        Ok(TrainerCommand(command))
    }
}

impl Default for TrainerCommand {
    fn default() -> Self {
        TrainerCommand(vec![
            "python3".to_string(),
            "scripts/finetune_mlm.py".to_string(),
        ])
    }
}

/// Runs secondary training and returns a reference to the trained weights.
///
/// Inputs are validated before anything is launched: the dataset must exist,
/// be non-empty, and start with a well-formed example; a mock base model must
/// point at a readable fixture. `epochs == 0` performs no update and returns
/// the base model.
pub fn finetune(
    manifest: &TrainingManifest,
    trainer: &TrainerCommand,
) -> Result<ModelConfig, FinetuneError> {
    manifest.validate()?;
    check_dataset(&manifest.dataset)?;
    check_base_model(&manifest.base_model)?;

    if manifest.epochs == 0 {
        return Ok(manifest.base_model.clone());
    }

    std::fs::create_dir_all(&manifest.output_dir).map_err(|source| FinetuneError::Output {
        path: manifest.output_dir.clone(),
        source,
    })?;
    let manifest_path = manifest.output_dir.join("manifest.json");
    manifest.save(&manifest_path)?;

    let mut command = Command::new(&trainer.0[0]);
    command
        .args(&trainer.0[1..])
        .arg("--manifest")
        .arg(&manifest_path);
    let status = command
        .status()
        .map_err(|e| FinetuneError::Backend(format!("failed to launch `{}`: {e}", trainer.0[0])))?;
    if !status.success() {
        return Err(FinetuneError::Backend(format!(
            "trainer exited with {status}"
        )));
    }

    Ok(ModelConfig {
        backend: BackendKind::Pretrained,
        identifier: manifest.output_dir.display().to_string(),
        mask_literal: manifest.base_model.mask_literal.clone(),
        device: manifest.base_model.device.clone(),
        command: manifest.base_model.command.clone(),
    })
}

fn check_dataset(path: &Path) -> Result<(), FinetuneError> {
    let content = std::fs::read_to_string(path).map_err(|e| FinetuneError::UnreadableDataset {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let first = content
        .lines()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| FinetuneError::UnreadableDataset {
            path: path.to_path_buf(),
            message: "dataset is empty".into(),
        })?;
    serde_json::from_str::<super::AntExample>(first).map_err(|e| {
        FinetuneError::UnreadableDataset {
            path: path.to_path_buf(),
            message: format!("first example is malformed: {e}"),
        }
    })?;
    Ok(())
}

fn check_base_model(model: &ModelConfig) -> Result<(), FinetuneError> {
    if model.identifier.is_empty() {
        return Err(FinetuneError::UnreadableModel(
            "identifier must be non-empty".into(),
        ));
    }
    if model.backend == BackendKind::Mock {
        model
            .resolve()
            .map_err(|e| FinetuneError::UnreadableModel(e.to_string()))?;
    }
    // a pretrained identifier may be a hub name; only local paths are checked
    if model.backend == BackendKind::Pretrained {
        let path = Path::new(&model.identifier);
        if model.identifier.contains(std::path::MAIN_SEPARATOR) && !path.exists() {
            return Err(FinetuneError::UnreadableModel(format!(
                "local model path {} does not exist",
                path.display()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ant::{build_ant_dataset, AmodRelation, ParsedSentence};
    use crate::scorer::MockFixture;

    fn write_dataset(dir: &Path) -> PathBuf {
        let corpus = vec![Ok(ParsedSentence {
            tokens: vec!["a".into(), "red".into(), "rose".into()],
            amods: vec![AmodRelation {
                adjective: 1,
                noun: 2,
            }],
        })];
        let (dataset, _) = build_ant_dataset(corpus, 5).unwrap();
        let path = dir.join("ant.jsonl");
        let mut file = std::fs::File::create(&path).unwrap();
        dataset.write_jsonl(&mut file).unwrap();
        path
    }

    fn write_mock(dir: &Path) -> PathBuf {
        let path = dir.join("mock.json");
        MockFixture::with_default_logit(Some(0.0)).save(&path).unwrap();
        path
    }

    #[test]
    fn zero_epochs_returns_the_base_model() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_dataset(dir.path());
        let mock = write_mock(dir.path());
        let base = ModelConfig::mock(mock.display().to_string());
        let mut manifest =
            TrainingManifest::new(dataset, base.clone(), dir.path().join("out"));
        manifest.epochs = 0;
        let result = finetune(&manifest, &TrainerCommand::default()).unwrap();
        assert_eq!(result, base);
        // nothing was written: no training step ran
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn missing_dataset_fails_before_training() {
        let dir = tempfile::tempdir().unwrap();
        let mock = write_mock(dir.path());
        let manifest = TrainingManifest::new(
            dir.path().join("absent.jsonl"),
            ModelConfig::mock(mock.display().to_string()),
            dir.path().join("out"),
        );
        assert!(matches!(
            finetune(&manifest, &TrainerCommand::default()),
            Err(FinetuneError::UnreadableDataset { .. })
        ));
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn unresolvable_base_model_fails_before_training() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_dataset(dir.path());
        let manifest = TrainingManifest::new(
            dataset,
            ModelConfig::mock("/nonexistent/mock.json"),
            dir.path().join("out"),
        );
        assert!(matches!(
            finetune(&manifest, &TrainerCommand::default()),
            Err(FinetuneError::UnreadableModel(_))
        ));
    }

    #[test]
    fn manifest_defaults_match_the_recipe() {
        let manifest = TrainingManifest::new(
            PathBuf::from("ant.jsonl"),
            ModelConfig::mock("mock.json"),
            PathBuf::from("out"),
        );
        assert_eq!(manifest.optimizer, "adam");
        assert_eq!(manifest.learning_rate, 5e-5);
        assert_eq!(manifest.batch_size, 32);
        assert_eq!(manifest.max_sequence_length, 64);
        assert_eq!(manifest.epochs, 3);
        assert_eq!(manifest.seed, 42);
        assert_eq!(manifest.warmup_steps, 0);
        assert_eq!(manifest.weight_decay, 0.0);
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = TrainingManifest::new(
            PathBuf::from("ant.jsonl"),
            ModelConfig::mock("mock.json"),
            PathBuf::from("out"),
        );
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        assert_eq!(TrainingManifest::load(&path).unwrap(), manifest);
    }

    #[test]
    fn stub_trainer_runs_and_yields_a_pretrained_ref() {
        if std::process::Command::new("python3")
            .arg("--version")
            .output()
            .is_err()
        {
            eprintln!("python3 unavailable; skipping stub trainer test");
            return;
        }
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_dataset(dir.path());
        let mock = write_mock(dir.path());
        let stub = dir.path().join("stub_trainer.py");
        std::fs::write(
            &stub,
            r#"
import argparse, json, pathlib
p = argparse.ArgumentParser()
p.add_argument("--manifest", required=True)
args = p.parse_args()
manifest = json.loads(pathlib.Path(args.manifest).read_text())
out = pathlib.Path(manifest["output_dir"])
(out / "weights.marker").write_text("trained\n")
print("step 1 loss 0.0")
"#,
        )
        .unwrap();
        let manifest = TrainingManifest::new(
            dataset,
            ModelConfig::mock(mock.display().to_string()),
            dir.path().join("out"),
        );
        let trainer = TrainerCommand::new(vec![
            "python3".to_string(),
            stub.display().to_string(),
        ])
        .unwrap();
        let result = finetune(&manifest, &trainer).unwrap();
        assert_eq!(result.backend, BackendKind::Pretrained);
        assert_eq!(result.identifier, dir.path().join("out").display().to_string());
        assert!(dir.path().join("out/weights.marker").exists());
        assert!(dir.path().join("out/manifest.json").exists());
    }

    #[test]
    fn failing_trainer_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_dataset(dir.path());
        let mock = write_mock(dir.path());
        let manifest = TrainingManifest::new(
            dataset,
            ModelConfig::mock(mock.display().to_string()),
            dir.path().join("out"),
        );
        let trainer = TrainerCommand::new(vec!["false".to_string()]).unwrap();
        assert!(matches!(
            finetune(&manifest, &trainer),
            Err(FinetuneError::Backend(_))
        ));
    }
}
