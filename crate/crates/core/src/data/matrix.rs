use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::bits::Bits;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AttributeKind {
    Binary,
    Numeric,
    Categorical { levels: Vec<String> },
}

impl AttributeKind {
    pub fn tag(&self) -> &'static str {
        match self {
            AttributeKind::Binary => "binary",
            AttributeKind::Numeric => "numeric",
            AttributeKind::Categorical { .. } => "categorical",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn binary(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Binary,
        }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }
}

/// Ordered attribute descriptors with a name lookup.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attribute>", into = "Vec<Attribute>")]
pub struct Schema {
    attributes: Vec<Attribute>,
    index: HashMap<String, usize>,
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.attributes == other.attributes
    }
}

impl TryFrom<Vec<Attribute>> for Schema {
    type Error = DataError;

    fn try_from(attributes: Vec<Attribute>) -> Result<Self, DataError> {
        Schema::new(attributes)
    }
}

impl From<Schema> for Vec<Attribute> {
    fn from(s: Schema) -> Self {
        s.attributes
    }
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self, DataError> {
        let mut index = HashMap::with_capacity(attributes.len());
        for (i, a) in attributes.iter().enumerate() {
            if index.insert(a.name.clone(), i).is_some() {
                return Err(DataError::DuplicateAttribute(a.name.clone()));
            }
        }
        Ok(Schema { attributes, index })
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, col: usize) -> &Attribute {
        &self.attributes[col]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Same attribute names and kinds, ignoring categorical level sets.
    pub fn compatible_with(&self, other: &Schema) -> bool {
        self.len() == other.len()
            && self
                .attributes
                .iter()
                .zip(&other.attributes)
                .all(|(a, b)| a.name == b.name && a.kind.tag() == b.kind.tag())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Binary(Bits),
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Binary(b) => b.len(),
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }
}

/// A single attribute value as seen through a row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell<'a> {
    Bit(bool),
    Num(f64),
    Cat(&'a str),
}

/// Examples over named attributes, stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    schema: Schema,
    columns: Vec<Column>,
    labels: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(schema: Schema, columns: Vec<Column>, labels: Vec<String>) -> Result<Self, DataError> {
        if columns.len() != schema.len() {
            return Err(DataError::Shape(format!(
                "{} columns for {} attributes",
                columns.len(),
                schema.len()
            )));
        }
        for (attr, col) in schema.attributes().iter().zip(&columns) {
            if col.len() != labels.len() {
                return Err(DataError::Shape(format!(
                    "column {} has {} entries, expected {}",
                    attr.name,
                    col.len(),
                    labels.len()
                )));
            }
            let ok = match (&attr.kind, col) {
                (AttributeKind::Binary, Column::Binary(_)) => true,
                (AttributeKind::Numeric, Column::Numeric(v)) => v.iter().all(|x| x.is_finite()),
                (AttributeKind::Categorical { levels }, Column::Categorical(codes)) => {
                    codes.iter().all(|&c| (c as usize) < levels.len())
                }
                _ => false,
            };
            if !ok {
                return Err(DataError::Shape(format!(
                    "column {} does not match its kind",
                    attr.name
                )));
            }
        }
        Ok(FeatureMatrix {
            schema,
            columns,
            labels,
        })
    }

    /// Binary matrix from dense 0/1 rows.
    pub fn from_binary_rows(names: Vec<String>, rows: &[Vec<u8>], labels: Vec<String>) -> Result<Self, DataError> {
        let width = names.len();
        let mut columns = vec![Bits::zeros(rows.len()); width];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(DataError::Shape(format!(
                    "row {r} has {} entries, expected {width}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => columns[c].set(r, true),
                    _ => return Err(DataError::Shape(format!("non-binary value {v} at row {r}"))),
                }
            }
        }
        let schema = Schema::new(names.into_iter().map(Attribute::binary).collect())?;
        FeatureMatrix::new(schema, columns.into_iter().map(Column::Binary).collect(), labels)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, col: usize) -> &Column {
        &self.columns[col]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, index: usize) -> RowRef<'_> {
        assert!(index < self.rows(), "row {index} out of range");
        RowRef { matrix: self, index }
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell<'_> {
        match &self.columns[col] {
            Column::Binary(b) => Cell::Bit(b.get(row)),
            Column::Numeric(v) => Cell::Num(v[row]),
            Column::Categorical(codes) => match &self.schema.attributes[col].kind {
                AttributeKind::Categorical { levels } => Cell::Cat(&levels[codes[row] as usize]),
                _ => unreachable!("validated at construction"),
            },
        }
    }

    /// Numeric view of a cell; categorical cells map to their level code.
    pub fn numeric(&self, row: usize, col: usize) -> f64 {
        match &self.columns[col] {
            Column::Binary(b) => b.get(row) as u8 as f64,
            Column::Numeric(v) => v[row],
            Column::Categorical(codes) => codes[row] as f64,
        }
    }

    /// Distinct labels, numerically ordered when every label is an integer.
    pub fn label_order(&self) -> Vec<String> {
        let mut distinct: Vec<String> = self.labels.to_vec();
        distinct.sort();
        distinct.dedup();
        sort_labels(&mut distinct);
        distinct
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Binary(b) => Column::Binary(Bits::from_indices(
                    rows.len(),
                    rows.iter().enumerate().filter(|(_, &r)| b.get(r)).map(|(i, _)| i),
                )),
                Column::Numeric(v) => Column::Numeric(rows.iter().map(|&r| v[r]).collect()),
                Column::Categorical(v) => Column::Categorical(rows.iter().map(|&r| v[r]).collect()),
            })
            .collect();
        FeatureMatrix {
            schema: self.schema.clone(),
            columns,
            labels: rows.iter().map(|&r| self.labels[r].clone()).collect(),
        }
    }
}

pub(crate) fn sort_labels(labels: &mut [String]) {
    if labels.iter().all(|l| l.parse::<i64>().is_ok()) {
        labels.sort_by_key(|l| l.parse::<i64>().unwrap());
    } else {
        labels.sort();
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RowRef<'a> {
    matrix: &'a FeatureMatrix,
    index: usize,
}

impl<'a> RowRef<'a> {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn schema(&self) -> &'a Schema {
        self.matrix.schema()
    }

    pub fn matrix(&self) -> &'a FeatureMatrix {
        self.matrix
    }

    pub fn get(&self, col: usize) -> Cell<'a> {
        self.matrix.cell(self.index, col)
    }

    pub fn label(&self) -> &'a str {
        &self.matrix.labels[self.index]
    }
}
