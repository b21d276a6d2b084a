//! Dataset ingestion and preprocessing into [`FeatureMatrix`] form.

mod idx;
mod image;
mod matrix;
mod tabular;
mod text;

use std::path::Path;

use thiserror::Error;

pub use idx::{load_idx, write_idx, RawImageSet};
pub use image::{binarize, moving_average, pixel_name, DEFAULT_THRESHOLD};
pub use matrix::{Attribute, AttributeKind, Cell, Column, FeatureMatrix, RowRef, Schema};
pub use tabular::{load_csv, sanitize_name};
pub use text::{build_vocabulary, load_jsonl, tokenize, vectorize_texts, word_attribute, Document, Vocabulary};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic { path: String, expected: u32, found: u32 },
    #[error("image file holds {images} images but label file holds {labels} labels")]
    DimensionMismatch { images: usize, labels: usize },
    #[error("{path}: truncated payload, need {expected} bytes, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("malformed matrix: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
