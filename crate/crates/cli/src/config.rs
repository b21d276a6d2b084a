use std::path::{Path, PathBuf};

use rulecraft::data::DEFAULT_THRESHOLD;
use rulecraft::pipeline::PipelineConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_VOCAB_SIZE: usize = 1000;
pub const THREADS_ENV: &str = "RULECRAFT_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    IdxImages,
    JsonlText,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocess {
    /// Binarize pixels at the threshold.
    Threshold,
    /// 2x2 block average, then threshold.
    Ma2,
    /// 4x4 block average, then threshold.
    Ma4,
    /// Binary bag of words over the most frequent training tokens.
    Bow,
    /// Attributes as they appear in the file.
    None,
}

/// How raw files become a feature matrix. Stored with the model so that
/// evaluation rebuilds exactly the training features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    pub preprocess: Preprocess,
    pub threshold: u8,
    pub vocab_size: usize,
    pub label_column: String,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            kind: DatasetKind::IdxImages,
            preprocess: Preprocess::Threshold,
            threshold: DEFAULT_THRESHOLD,
            vocab_size: DEFAULT_VOCAB_SIZE,
            label_column: "label".into(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        let ok = match self.kind {
            DatasetKind::IdxImages => matches!(
                self.preprocess,
                Preprocess::Threshold | Preprocess::Ma2 | Preprocess::Ma4
            ),
            DatasetKind::JsonlText => self.preprocess == Preprocess::Bow,
            DatasetKind::Csv => self.preprocess == Preprocess::None,
        };
        if !ok {
            return Err(CliError::Config(format!(
                "preprocessing {:?} does not apply to dataset kind {:?}",
                self.preprocess, self.kind
            )));
        }
        if self.threshold == 0 {
            return Err(CliError::Config("threshold must be in [1, 255]".into()));
        }
        if self.vocab_size == 0 {
            return Err(CliError::Config("vocab_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// IDX label files; derived from the image file name when absent.
    pub train_labels: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    /// Keep only the first rows of each split.
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub out: Option<PathBuf>,
    pub dataset: DatasetSpec,
    pub pipeline: PipelineConfig,
}

impl CliConfig {
    /// Reads a JSON config. Also reports whether it set `pipeline.parallelism`,
    /// which decides if the environment fallback applies.
    pub fn load(path: &Path) -> Result<(CliConfig, bool), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let raw: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let has_parallelism = raw.pointer("/pipeline/parallelism").is_some();
        let cfg = serde_json::from_value(raw).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok((cfg, has_parallelism))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dataset.validate()?;
        self.pipeline.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_and_preprocessing_must_agree() {
        let mut spec = DatasetSpec::default();
        assert!(spec.validate().is_ok());
        spec.preprocess = Preprocess::Bow;
        assert!(spec.validate().is_err());
        spec.kind = DatasetKind::JsonlText;
        assert!(spec.validate().is_ok());
        spec.kind = DatasetKind::Csv;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn config_json_uses_kebab_case_enums() {
        let cfg: CliConfig = serde_json::from_str(
            r#"{"train": "a.jsonl", "dataset": {"kind": "jsonl-text", "preprocess": "bow"}, "pipeline": {"learner": "ripper"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.dataset.kind, DatasetKind::JsonlText);
        assert_eq!(cfg.pipeline.learner, rulecraft::pipeline::Learner::Ripper);
        assert!(serde_json::from_str::<CliConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
