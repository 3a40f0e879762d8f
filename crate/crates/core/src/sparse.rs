//! Sparse feature vectors.
//!
//! A [`SparseVector`] stores only its nonzero coordinates, sorted by index.
//! Every constructor enforces the storage invariants: indices are strictly
//! increasing and below `dim`, and stored values are finite and nonzero.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from `(index, value)` pairs.
    ///
    /// Pairs must be strictly increasing in index. Explicit zeros are
    /// rejected; use [`SparseVector::from_pairs_dropping_zeros`] to discard them.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        Self::build(dim, entries, false)
    }

    /// Like [`SparseVector::new`] but silently drops entries equal to zero.
    pub fn from_pairs_dropping_zeros(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<Self> {
        Self::build(dim, entries, true)
    }

    fn build(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, f64)>,
        drop_zeros: bool,
    ) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (index, value) in entries {
            if index >= dim {
                return Err(Error::argument(format!(
                    "index {index} out of range for dimension {dim}"
                )));
            }
            if let Some(&last) = indices.last() {
                if index <= last {
                    return Err(Error::argument(format!(
                        "indices must be strictly increasing ({index} after {last})"
                    )));
                }
            }
            if !value.is_finite() {
                return Err(Error::argument(format!(
                    "non-finite value at index {index}"
                )));
            }
            if value == 0.0 {
                if drop_zeros {
                    continue;
                }
                return Err(Error::argument(format!("explicit zero at index {index}")));
            }
            indices.push(index);
            values.push(value);
        }
        Ok(Self {
            dim,
            indices,
            values,
        })
    }

    /// The all-zero vector of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Converts a dense slice, keeping nonzero coordinates.
    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::from_pairs_dropping_zeros(values.len(), values.iter().copied().enumerate())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Value at `index`, zero when not stored.
    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            dense[i] = v;
        }
        dense
    }

    pub fn squared_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Inner product by merging the two index lists.
    pub fn dot(&self, other: &SparseVector) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Inner product with a dense vector of the same dimension.
    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        debug_assert_eq!(dense.len(), self.dim);
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    /// `self - other`, dropping coordinates that cancel exactly.
    pub fn sub(&self, other: &SparseVector) -> Result<SparseVector> {
        check_dim(self.dim, other.dim)?;
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        let (mut a, mut b) = (0, 0);
        loop {
            let (index, value) = match (self.indices.get(a), other.indices.get(b)) {
                (None, None) => break,
                (Some(&i), None) => {
                    a += 1;
                    (i, self.values[a - 1])
                }
                (None, Some(&j)) => {
                    b += 1;
                    (j, -other.values[b - 1])
                }
                (Some(&i), Some(&j)) if i < j => {
                    a += 1;
                    (i, self.values[a - 1])
                }
                (Some(&i), Some(&j)) if i > j => {
                    b += 1;
                    (j, -other.values[b - 1])
                }
                (Some(&i), Some(_)) => {
                    a += 1;
                    b += 1;
                    (i, self.values[a - 1] - other.values[b - 1])
                }
            };
            if value != 0.0 {
                indices.push(index);
                values.push(value);
            }
        }
        Ok(SparseVector {
            dim: self.dim,
            indices,
            values,
        })
    }

    /// `alpha * self`. Scaling by zero yields the empty vector.
    pub fn scaled(&self, alpha: f64) -> SparseVector {
        let mut out = SparseVector::zeros(self.dim);
        for (i, v) in self.iter() {
            let scaled = alpha * v;
            if scaled != 0.0 {
                out.indices.push(i);
                out.values.push(scaled);
            }
        }
        out
    }
}
