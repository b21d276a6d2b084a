//! Principal component analysis, used only to drive clustering.
//!
//! Rule learners never see the embedding: they always consume the original
//! attributes, so the learned rules stay readable.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::Bits;
use crate::data::{Column, FeatureMatrix};

pub const DEFAULT_COMPONENTS: usize = 50;
const EIGEN_TOLERANCE: f64 = 1e-10;
const EIGEN_ITERATIONS_PER_DIM: usize = 1000;
const CHUNK_ROWS: usize = 512;

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("k = {k} exceeds min(rows, width) = {max}")]
    TooManyComponents { k: usize, max: usize },
    #[error("degenerate input: every row is identical")]
    Degenerate,
    #[error("eigendecomposition did not converge")]
    NoConvergence,
    #[error("width mismatch: model has {model}, matrix has {matrix}")]
    WidthMismatch { model: usize, matrix: usize },
    #[error("{0}")]
    Io(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// One principal axis per row, ordered by explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddedMatrix {
    pub dim: usize,
    /// Row-major `source_row_ids.len() x dim`.
    pub values: Vec<f64>,
    pub source_row_ids: Vec<usize>,
}

impl EmbeddedMatrix {
    pub fn rows(&self) -> usize {
        self.source_row_ids.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Points given directly, mostly for tests and small inputs.
    pub fn from_points(points: &[Vec<f64>]) -> Self {
        let dim = points.first().map_or(0, |p| p.len());
        EmbeddedMatrix {
            dim,
            values: points.iter().flat_map(|p| p.iter().copied()).collect(),
            source_row_ids: (0..points.len()).collect(),
        }
    }

    /// Rows at the given positions, keeping their source ids.
    pub fn subset(&self, positions: &[usize]) -> EmbeddedMatrix {
        EmbeddedMatrix {
            dim: self.dim,
            values: positions.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            source_row_ids: positions.iter().map(|&i| self.source_row_ids[i]).collect(),
        }
    }
}

fn dense_chunk(matrix: &FeatureMatrix, rows: &[usize], mean: &[f64]) -> DMatrix<f64> {
    let width = matrix.width();
    DMatrix::from_fn(rows.len(), width, |i, c| matrix.numeric(rows[i], c) - mean[c])
}

/// Scatter matrix of 0/1 columns from exact co-occurrence counts:
/// `sum (x_i - m_i)(x_j - m_j) = c_ij - c_i c_j / n`.
fn binary_scatter(matrix: &FeatureMatrix, rows: &[usize]) -> DMatrix<f64> {
    let width = matrix.width();
    let mask = Bits::from_indices(matrix.rows(), rows.iter().copied());
    let cols: Vec<Bits> = matrix
        .columns()
        .iter()
        .map(|c| match c {
            Column::Binary(b) => b.and(&mask),
            _ => unreachable!(),
        })
        .collect();
    let counts: Vec<usize> = cols.iter().map(Bits::count).collect();
    let n = rows.len() as f64;
    let mut cov = DMatrix::<f64>::zeros(width, width);
    for i in 0..width {
        if counts[i] == 0 {
            continue;
        }
        for j in i..width {
            if counts[j] == 0 {
                continue;
            }
            let both = cols[i].and_count(&cols[j]) as f64;
            let v = both - counts[i] as f64 * counts[j] as f64 / n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

pub fn pca_fit(matrix: &FeatureMatrix, k: usize) -> Result<PcaModel, PcaError> {
    let rows: Vec<usize> = (0..matrix.rows()).collect();
    pca_fit_rows(matrix, &rows, k)
}

/// Fit on a subset of rows (the training rows of one binary task).
pub fn pca_fit_rows(matrix: &FeatureMatrix, rows: &[usize], k: usize) -> Result<PcaModel, PcaError> {
    let n = rows.len();
    let width = matrix.width();
    if n < 2 {
        return Err(PcaError::TooFewRows(n));
    }
    if k > n.min(width) {
        return Err(PcaError::TooManyComponents { k, max: n.min(width) });
    }

    let mut mean = vec![0.0; width];
    for &r in rows {
        for (c, m) in mean.iter_mut().enumerate() {
            *m += matrix.numeric(r, c);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = if matrix.columns().iter().all(|c| matches!(c, Column::Binary(_))) {
        binary_scatter(matrix, rows)
    } else {
        let mut cov = DMatrix::<f64>::zeros(width, width);
        for chunk in rows.chunks(CHUNK_ROWS) {
            let x = dense_chunk(matrix, chunk, &mean);
            cov += x.transpose() * &x;
        }
        cov
    };
    cov /= (n - 1) as f64;

    let total_variance: f64 = cov.diagonal().iter().sum();
    if k == 0 {
        return Ok(PcaModel {
            mean,
            components: Vec::new(),
            explained_variance: Vec::new(),
        });
    }
    if total_variance <= 0.0 {
        return Err(PcaError::Degenerate);
    }

    let eig = SymmetricEigen::try_new(cov, EIGEN_TOLERANCE, EIGEN_ITERATIONS_PER_DIM * width)
        .ok_or(PcaError::NoConvergence)?;
    let mut order: Vec<usize> = (0..width).collect();
    // descending eigenvalue, index as tie-break keeps the order deterministic
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
        let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        axis.iter_mut().for_each(|v| *v /= norm);
        // sign: the largest-magnitude entry (first one on ties) is positive
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(axis);
        explained_variance.push(eig.eigenvalues[j].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn width(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PcaError> {
        let text = serde_json::to_string(self).map_err(|e| PcaError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| PcaError::Io(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PcaError> {
        let text = std::fs::read_to_string(path).map_err(|e| PcaError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| PcaError::Io(e.to_string()))
    }
}

pub fn pca_transform(model: &PcaModel, matrix: &FeatureMatrix) -> Result<EmbeddedMatrix, PcaError> {
    let rows: Vec<usize> = (0..matrix.rows()).collect();
    pca_transform_rows(model, matrix, &rows)
}

/// `row -> components . (row - mean)` for each listed row.
pub fn pca_transform_rows(
    model: &PcaModel,
    matrix: &FeatureMatrix,
    rows: &[usize],
) -> Result<EmbeddedMatrix, PcaError> {
    if matrix.width() != model.width() {
        return Err(PcaError::WidthMismatch {
            model: model.width(),
            matrix: matrix.width(),
        });
    }
    let k = model.k();
    let basis = DMatrix::from_fn(model.width(), k, |c, j| model.components[j][c]);
    let mut values = Vec::with_capacity(rows.len() * k);
    for chunk in rows.chunks(CHUNK_ROWS) {
        let projected = dense_chunk(matrix, chunk, &model.mean) * &basis;
        for i in 0..chunk.len() {
            values.extend(projected.row(i).iter().copied());
        }
    }
    Ok(EmbeddedMatrix {
        dim: k,
        values,
        source_row_ids: rows.to_vec(),
    })
}
