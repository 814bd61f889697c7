//! Dense matrix primitives shared by every loss: column normalization,
//! cosine similarity, temperature softmax and assignment composition.
//!
//! Matrices are stored column-major (`nalgebra::DMatrix<f64>`). An
//! [`EmbeddingMatrix`] holds one object per column, so a frame with `n`
//! objects and `D`-dimensional embeddings is a `D x n` matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Columns with a norm below this are rejected by [`normalize_columns`].
pub const MIN_COLUMN_NORM: f64 = 1e-12;

/// Per-frame bundle of identity embeddings, one column per object.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: DMatrix<f64>,
}

impl EmbeddingMatrix {
    pub fn new(data: DMatrix<f64>) -> Self {
        Self { data }
    }

    /// Builds a `dim x count` matrix from a column-major buffer.
    pub fn from_column_slice(dim: usize, count: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * count {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {dim}x{count} matrix",
                values.len()
            )));
        }
        Ok(Self::new(DMatrix::from_column_slice(dim, count, values)))
    }

    /// Builds a matrix from object vectors; every vector must have length `dim`.
    pub fn from_columns<V: AsRef<[f64]>>(dim: usize, columns: &[V]) -> Result<Self> {
        let mut data = DMatrix::zeros(dim, columns.len());
        for (j, col) in columns.iter().enumerate() {
            let col = col.as_ref();
            if col.len() != dim {
                return Err(Error::DimMismatch {
                    left: dim,
                    right: col.len(),
                });
            }
            data.column_mut(j).copy_from_slice(col);
        }
        Ok(Self::new(data))
    }

    pub fn empty(dim: usize) -> Self {
        Self::new(DMatrix::zeros(dim, 0))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn count(&self) -> usize {
        self.data.ncols()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Keeps the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self::new(self.data.select_columns(indices))
    }

    /// True when every column has unit norm within `tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        self.data
            .column_iter()
            .all(|c| (c.norm() - 1.0).abs() <= tol)
    }
}

/// Cosine similarities between the objects of two frames (`rows x cols`).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    data: DMatrix<f64>,
}

impl SimilarityMatrix {
    pub fn new(data: DMatrix<f64>) -> Self {
        Self { data }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.data.transpose())
    }

    /// Largest similarity in row `i`, or `-inf` for a row with no columns.
    pub fn row_max(&self, i: usize) -> f64 {
        self.data
            .row(i)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Row-stochastic matching probabilities between the objects of two frames.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix {
    data: DMatrix<f64>,
}

impl AssignmentMatrix {
    /// Wraps `data`, checking that entries lie in `[0, 1]` and rows sum to 1 within `tol`.
    pub fn try_new(data: DMatrix<f64>, tol: f64) -> Result<Self> {
        for (i, row) in data.row_iter().enumerate() {
            if row.iter().any(|&v| !(-tol..=1.0 + tol).contains(&v)) {
                return Err(Error::ShapeMismatch(format!(
                    "row {i} has entries outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::ShapeMismatch(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { data })
    }

    pub(crate) fn new_unchecked(data: DMatrix<f64>) -> Self {
        Self { data }
    }

    /// Square identity assignment (each object matches itself).
    pub fn identity(n: usize) -> Self {
        Self::new_unchecked(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.data.diagonal().iter().copied().collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }
}

/// Scales every column to unit L2 norm.
pub fn normalize_columns(e: &EmbeddingMatrix) -> Result<EmbeddingMatrix> {
    let mut data = e.data.clone();
    for (j, mut col) in data.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm < MIN_COLUMN_NORM {
            return Err(Error::ZeroColumn(j));
        }
        col /= norm;
    }
    Ok(EmbeddingMatrix::new(data))
}

/// `A^T B`: cosine similarities when both inputs are normalized.
pub fn similarity(a: &EmbeddingMatrix, b: &EmbeddingMatrix) -> Result<SimilarityMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(SimilarityMatrix::new(a.data.tr_mul(&b.data)))
}

/// Row-wise softmax of `s / tau`, stabilized by subtracting each row's max.
pub fn row_softmax(s: &SimilarityMatrix, tau: f64) -> Result<AssignmentMatrix> {
    check_tau(tau)?;
    if s.rows() == 0 || s.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(AssignmentMatrix::new_unchecked(softmax_rows(&s.data, tau)))
}

/// Re-applies the row softmax to an assignment (or any product of assignments).
pub fn resoftmax(a: &AssignmentMatrix, tau: f64) -> Result<AssignmentMatrix> {
    check_tau(tau)?;
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(AssignmentMatrix::new_unchecked(softmax_rows(&a.data, tau)))
}

/// Matrix product of two assignments; the result is again row-stochastic.
pub fn compose(a: &AssignmentMatrix, b: &AssignmentMatrix) -> Result<AssignmentMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch(format!(
            "cannot compose {}x{} with {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(AssignmentMatrix::new_unchecked(&a.data * &b.data))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "temperature must be positive, got {tau}"
        )))
    }
}

pub(crate) fn softmax_rows(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let max = m.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for j in 0..m.ncols() {
            let e = ((m[(i, j)] - max) / tau).exp();
            out[(i, j)] = e;
            sum += e;
        }
        for j in 0..m.ncols() {
            out[(i, j)] /= sum;
        }
    }
    out
}
