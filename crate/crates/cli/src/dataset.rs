use std::path::{Path, PathBuf};

use rulecraft::data::{
    binarize, build_vocabulary, load_csv, load_idx, load_jsonl, moving_average, vectorize_texts, FeatureMatrix,
    Vocabulary,
};

use crate::config::{DatasetKind, DatasetSpec, Preprocess};
use crate::error::CliError;

/// `train-images-idx3-ubyte` pairs with `train-labels-idx1-ubyte`.
pub fn idx_labels_path(images: &Path) -> Result<PathBuf, CliError> {
    let name = images.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    if !name.contains("images-idx3") {
        return Err(CliError::Config(format!(
            "cannot derive a label file for {}; set the labels path explicitly",
            images.display()
        )));
    }
    Ok(images.with_file_name(name.replace("images-idx3", "labels-idx1")))
}

fn require(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Config(format!("dataset not found: {}", path.display())))
    }
}

/// Reads one split. Text datasets build their vocabulary from the split
/// unless one is given, and return the vocabulary used.
pub fn load(
    spec: &DatasetSpec,
    path: &Path,
    labels: Option<&Path>,
    vocab: Option<&Vocabulary>,
    limit: Option<usize>,
) -> Result<(FeatureMatrix, Option<Vocabulary>), CliError> {
    require(path)?;
    match spec.kind {
        DatasetKind::IdxImages => {
            let labels = match labels {
                Some(l) => l.to_path_buf(),
                None => idx_labels_path(path)?,
            };
            require(&labels)?;
            let mut raw = load_idx(path, &labels).map_err(CliError::runtime)?;
            if let Some(n) = limit {
                raw = raw.select(&(0..n.min(raw.count())).collect::<Vec<_>>());
            }
            let raw = match spec.preprocess {
                Preprocess::Ma2 => moving_average(&raw, 2).map_err(CliError::runtime)?,
                Preprocess::Ma4 => moving_average(&raw, 4).map_err(CliError::runtime)?,
                _ => raw,
            };
            Ok((binarize(&raw, spec.threshold).map_err(CliError::runtime)?, None))
        }
        DatasetKind::JsonlText => {
            let mut docs = load_jsonl(path).map_err(CliError::runtime)?;
            if let Some(n) = limit {
                docs.truncate(n);
            }
            let vocab = match vocab {
                Some(v) => v.clone(),
                None => {
                    let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
                    build_vocabulary(&texts, spec.vocab_size).map_err(CliError::runtime)?
                }
            };
            let m = vectorize_texts(&docs, &vocab).map_err(CliError::runtime)?;
            Ok((m, Some(vocab)))
        }
        DatasetKind::Csv => {
            let m = load_csv(path, &spec.label_column).map_err(CliError::runtime)?;
            let m = match limit {
                Some(n) if n < m.rows() => m.select_rows(&(0..n).collect::<Vec<_>>()),
                _ => m,
            };
            Ok((m, None))
        }
    }
}
