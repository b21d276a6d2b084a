//! CSV ingestion: header names the attributes, one column carries the label.

use std::path::Path;

use super::matrix::{Attribute, AttributeKind, Column, FeatureMatrix, Schema};
use super::DataError;

/// Attribute names are restricted to `[A-Za-z0-9_]` so they survive the rule grammar.
pub fn sanitize_name(raw: &str) -> String {
    let s: String = raw
        .trim()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<FeatureMatrix, DataError> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let records: Vec<csv::StringRecord> = reader
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| csv_error(path, e))?;
    parse_table(&headers, &records, label_column, &path.display().to_string())
}

fn csv_error(path: &Path, e: csv::Error) -> DataError {
    DataError::Format {
        path: path.display().to_string(),
        line: e.position().map(|p| p.line() as usize).unwrap_or(0),
        message: e.to_string(),
    }
}

fn parse_table(
    headers: &[String],
    records: &[csv::StringRecord],
    label_column: &str,
    origin: &str,
) -> Result<FeatureMatrix, DataError> {
    let label_idx = headers.iter().position(|h| h == label_column).ok_or_else(|| {
        DataError::InvalidParameter(format!("label column `{label_column}` not in header of {origin}"))
    })?;

    let mut attributes = Vec::new();
    let mut columns = Vec::new();
    for (c, header) in headers.iter().enumerate() {
        if c == label_idx {
            continue;
        }
        let cells: Vec<&str> = records.iter().map(|r| r.get(c).unwrap_or("").trim()).collect();
        let numeric: Option<Vec<f64>> = cells
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        let name = sanitize_name(header);
        match numeric {
            Some(values) if !values.is_empty() => {
                attributes.push(Attribute::numeric(name));
                columns.push(Column::Numeric(values));
            }
            _ => {
                let mut levels: Vec<String> = cells.iter().map(|s| s.to_string()).collect();
                levels.sort();
                levels.dedup();
                let codes = cells
                    .iter()
                    .map(|s| levels.binary_search_by(|l| l.as_str().cmp(s)).unwrap() as u32)
                    .collect();
                attributes.push(Attribute {
                    name,
                    kind: AttributeKind::Categorical { levels },
                });
                columns.push(Column::Categorical(codes));
            }
        }
    }
    let labels = records
        .iter()
        .map(|r| r.get(label_idx).unwrap_or("").trim().to_string())
        .collect();
    FeatureMatrix::new(Schema::new(attributes)?, columns, labels)
}
