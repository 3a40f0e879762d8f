//! Bilinear similarity models `S_M(x, y) = xᵀ M y` and the triplet hinge loss.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sparse::SparseVector;

/// Anchor, a more relevant item and a less relevant item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: SparseVector,
    pub positive: SparseVector,
    pub negative: SparseVector,
}

impl Triplet {
    pub fn new(
        anchor: SparseVector,
        positive: SparseVector,
        negative: SparseVector,
    ) -> Result<Self> {
        check_dim(anchor.dim(), positive.dim())?;
        check_dim(anchor.dim(), negative.dim())?;
        Ok(Self {
            anchor,
            positive,
            negative,
        })
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }
}

/// A rank-one matrix `left · rightᵀ`, kept in factored form.
///
/// For the hinge loss the subgradient is `-x (x⁺ - x⁻)ᵀ` when the loss is
/// positive, and both factors are empty otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneGradient {
    pub left: SparseVector,
    pub right: SparseVector,
}

impl RankOneGradient {
    pub fn zero(dim: usize) -> Self {
        Self {
            left: SparseVector::zeros(dim),
            right: SparseVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.left.dim()
    }

    pub fn is_zero(&self) -> bool {
        self.left.is_empty() || self.right.is_empty()
    }

    /// Upper bound on the number of nonzero entries of the implied matrix.
    pub fn nnz_bound(&self) -> usize {
        self.left.nnz() * self.right.nnz()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.left.get(row) * self.right.get(col)
    }

    /// Nonzero entries of the implied matrix in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.left
            .iter()
            .flat_map(move |(i, u)| self.right.iter().map(move |(j, v)| (i, j, u * v)))
    }

    /// Row-major dense copy, `dim * dim` values.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.dim();
        let mut dense = vec![0.0; d * d];
        for (i, j, g) in self.entries() {
            dense[i * d + j] = g;
        }
        dense
    }
}

/// A sparse `dim × dim` similarity matrix.
///
/// Rows are stored as column-sorted lists and no stored value is ever
/// exactly zero, so `nnz` is the true count of nonzero entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityModel {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    nnz: usize,
}

impl SimilarityModel {
    /// The all-zero model.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
            nnz: 0,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            rows: (0..dim).map(|i| vec![(i, 1.0)]).collect(),
            nnz: dim,
        }
    }

    /// Builds a model from `(row, col, value)` triples in any order.
    ///
    /// Zero or non-finite values, out-of-range indices and duplicate
    /// coordinates are rejected.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut model = Self::zeros(dim);
        for (row, col, value) in entries {
            if row >= dim || col >= dim {
                return Err(Error::argument(format!(
                    "entry ({row}, {col}) out of range for dimension {dim}"
                )));
            }
            if value == 0.0 || !value.is_finite() {
                return Err(Error::argument(format!(
                    "entry ({row}, {col}) has invalid value {value}"
                )));
            }
            model.rows[row].push((col, value));
        }
        for (row, entries) in model.rows.iter_mut().enumerate() {
            entries.sort_by_key(|&(col, _)| col);
            if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::argument(format!(
                    "duplicate entry ({row}, {})",
                    w[0].0
                )));
            }
            model.nnz += entries.len();
        }
        Ok(model)
    }

    /// Builds a model from a row-major dense matrix, skipping zeros.
    pub fn from_dense(dim: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != dim * dim {
            return Err(Error::argument(format!(
                "dense matrix has {} values, expected {}",
                dense.len(),
                dim * dim
            )));
        }
        Self::from_entries(
            dim,
            dense
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(k, &v)| (k / dim, k % dim, v)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn row(&self, row: usize) -> &[(usize, f64)] {
        &self.rows[row]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let entries = &self.rows[row];
        match entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim * self.dim];
        for (i, j, v) in self.iter() {
            dense[i * self.dim + j] = v;
        }
        dense
    }

    pub fn l1_norm(&self) -> f64 {
        self.iter().map(|(_, _, v)| v.abs()).sum()
    }

    /// L1 norm over entries off the diagonal.
    pub fn off_diagonal_l1_norm(&self) -> f64 {
        self.iter()
            .filter(|(i, j, _)| i != j)
            .map(|(_, _, v)| v.abs())
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.iter().map(|(_, _, v)| v * v).sum::<f64>().sqrt()
    }

    /// Bilinear score `xᵀ M y`.
    pub fn score(&self, x: &SparseVector, y: &SparseVector) -> Result<f64> {
        check_dim(self.dim, x.dim())?;
        check_dim(self.dim, y.dim())?;
        let mut acc = 0.0;
        for (i, xi) in x.iter() {
            let row_dot = row_dot(&self.rows[i], y);
            acc += xi * row_dot;
        }
        Ok(acc)
    }

    /// Dense row vector `xᵀ M`, reused when one query is scored against
    /// many candidates.
    pub fn left_product(&self, x: &SparseVector) -> Result<Vec<f64>> {
        check_dim(self.dim, x.dim())?;
        let mut out = vec![0.0; self.dim];
        for (i, xi) in x.iter() {
            for &(j, m) in &self.rows[i] {
                out[j] += xi * m;
            }
        }
        Ok(out)
    }

    /// `[1 - S_M(x, x⁺) + S_M(x, x⁻)]₊`.
    pub fn hinge_loss(&self, t: &Triplet) -> Result<f64> {
        let positive = self.score(&t.anchor, &t.positive)?;
        let negative = self.score(&t.anchor, &t.negative)?;
        Ok((1.0 - positive + negative).max(0.0))
    }

    /// Subgradient of the hinge loss at this model.
    pub fn subgradient(&self, t: &Triplet) -> Result<RankOneGradient> {
        Ok(self.loss_and_subgradient(t)?.1)
    }

    /// Hinge loss and its subgradient from a single pair of score evaluations.
    pub fn loss_and_subgradient(&self, t: &Triplet) -> Result<(f64, RankOneGradient)> {
        let loss = self.hinge_loss(t)?;
        if loss > 0.0 {
            let gradient = RankOneGradient {
                left: t.anchor.scaled(-1.0),
                right: t.positive.sub(&t.negative)?,
            };
            Ok((loss, gradient))
        } else {
            Ok((loss, RankOneGradient::zero(self.dim)))
        }
    }

    /// Adds `values` into row `row`. `values` must be sorted by column.
    /// Sums that cancel exactly are removed from storage.
    pub(crate) fn add_to_row(&mut self, row: usize, values: &[(usize, f64)]) {
        if values.is_empty() {
            return;
        }
        let old = std::mem::take(&mut self.rows[row]);
        let merged = merge_add(&old, values);
        self.nnz = self.nnz - old.len() + merged.len();
        self.rows[row] = merged;
    }

    /// Replaces row `row`. `entries` must be column-sorted and zero-free.
    pub(crate) fn set_row(&mut self, row: usize, entries: Vec<(usize, f64)>) {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(_, v)| v != 0.0));
        self.nnz = self.nnz - self.rows[row].len() + entries.len();
        self.rows[row] = entries;
    }

    /// `M += coef · u vᵀ` over the supports of `u` and `v`.
    pub(crate) fn add_outer(&mut self, coef: f64, u: &SparseVector, v: &SparseVector) {
        let mut buf = Vec::with_capacity(v.nnz());
        for (i, ui) in u.iter() {
            buf.clear();
            let scale = coef * ui;
            buf.extend(v.iter().map(|(j, vj)| (j, scale * vj)));
            self.add_to_row(i, &buf);
        }
    }

    /// Replaces every stored value with `f(row, col, value)` and drops
    /// entries that become exactly zero.
    pub(crate) fn map_in_place(&mut self, mut f: impl FnMut(usize, usize, f64) -> f64) {
        let mut nnz = 0;
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.retain_mut(|(j, v)| {
                *v = f(i, *j, *v);
                *v != 0.0
            });
            nnz += row.len();
        }
        self.nnz = nnz;
    }

    /// Mutable access to stored rows for operators that need a joint pass
    /// over the model and another sparse structure. The callback must
    /// uphold the sorted, zero-free row invariant.
    pub(crate) fn map_rows_in_place(&mut self, mut f: impl FnMut(usize, &mut Vec<(usize, f64)>)) {
        let mut nnz = 0;
        for (i, row) in self.rows.iter_mut().enumerate() {
            f(i, row);
            nnz += row.len();
        }
        self.nnz = nnz;
    }
}

/// `Σ_j row_j · y_j` for a column-sorted row against a sparse vector.
fn row_dot(row: &[(usize, f64)], y: &SparseVector) -> f64 {
    let (yi, yv) = (y.indices(), y.values());
    if row.is_empty() || yi.is_empty() {
        return 0.0;
    }
    // Binary search into the longer side when the sizes are lopsided.
    if row.len() > 8 * yi.len() {
        let mut acc = 0.0;
        for (&j, &v) in yi.iter().zip(yv) {
            if let Ok(pos) = row.binary_search_by_key(&j, |&(c, _)| c) {
                acc += row[pos].1 * v;
            }
        }
        return acc;
    }
    let (mut a, mut b) = (0, 0);
    let mut acc = 0.0;
    while a < row.len() && b < yi.len() {
        match row[a].0.cmp(&yi[b]) {
            Ordering::Less => a += 1,
            Ordering::Greater => b += 1,
            Ordering::Equal => {
                acc += row[a].1 * yv[b];
                a += 1;
                b += 1;
            }
        }
    }
    acc
}

/// Sorted merge of two column lists, summing shared columns and dropping
/// exact zeros.
pub(crate) fn merge_add(a: &[(usize, f64)], b: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                if b[j].1 != 0.0 {
                    out.push(b[j]);
                }
                j += 1;
            }
            Ordering::Equal => {
                let sum = a[i].1 + b[j].1;
                if sum != 0.0 {
                    out.push((a[i].0, sum));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend(b[j..].iter().copied().filter(|&(_, v)| v != 0.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(values: &[f64]) -> SparseVector {
        SparseVector::from_dense(values).unwrap()
    }

    fn example_model() -> SimilarityModel {
        SimilarityModel::from_dense(2, &[0.2, -0.1, 0.4, 0.3]).unwrap()
    }

    /// Brute-force xᵀMy over a dense row-major matrix.
    fn dense_score(m: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let d = x.len();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += x[i] * m[i * d + j] * y[j];
            }
        }
        acc
    }

    #[test]
    fn score_examples() {
        let id = SimilarityModel::identity(2);
        assert_eq!(id.score(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(id.score(&v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap(), 5.0);

        let m = example_model();
        let (x, y) = ([1.0, 2.0], [0.0, 1.0]);
        let oracle = dense_score(&m.to_dense(), &x, &y);
        assert!((oracle - 0.5).abs() < 1e-15);
        assert!((m.score(&v(&x), &v(&y)).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn score_rejects_dimension_mismatch() {
        let id = SimilarityModel::identity(2);
        let err = id.score(&v(&[1.0, 0.0, 1.0]), &v(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::Dimension {
                expected: 2,
                found: 3
            }
        ));
    }

    #[test]
    fn hinge_loss_examples() {
        let id = SimilarityModel::identity(2);
        let t = Triplet::new(v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])).unwrap();
        assert_eq!(id.hinge_loss(&t).unwrap(), 0.0);

        let zero = SimilarityModel::zeros(2);
        assert_eq!(zero.hinge_loss(&t).unwrap(), 1.0);

        let m = example_model();
        let t = Triplet::new(v(&[1.0, 2.0]), v(&[0.0, 1.0]), v(&[1.0, 0.0])).unwrap();
        let dense = m.to_dense();
        let oracle = (1.0 - dense_score(&dense, &[1.0, 2.0], &[0.0, 1.0])
            + dense_score(&dense, &[1.0, 2.0], &[1.0, 0.0]))
        .max(0.0);
        assert!((oracle - 1.5).abs() < 1e-15);
        assert!((m.hinge_loss(&t).unwrap() - oracle).abs() < 1e-15);
    }

    #[test]
    fn subgradient_examples() {
        let id = SimilarityModel::identity(2);
        let t = Triplet::new(v(&[1.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])).unwrap();
        assert!(id.subgradient(&t).unwrap().is_zero());

        let zero = SimilarityModel::zeros(2);
        let t = Triplet::new(v(&[1.0, 2.0]), v(&[0.0, 1.0]), v(&[1.0, 0.0])).unwrap();
        let g = zero.subgradient(&t).unwrap();
        assert_eq!(g.left.to_dense(), vec![-1.0, -2.0]);
        assert_eq!(g.right.to_dense(), vec![-1.0, 1.0]);
        // Dense oracle: -x (x⁺ - x⁻)ᵀ by hand.
        let (x, p, n) = ([1.0, 2.0], [0.0, 1.0], [1.0, 0.0]);
        let mut oracle = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                oracle[i * 2 + j] = -x[i] * (p[j] - n[j]);
            }
        }
        assert_eq!(oracle, vec![1.0, -1.0, 2.0, -2.0]);
        assert_eq!(g.to_dense(), oracle);

        let same = Triplet::new(v(&[1.0, 2.0]), v(&[0.0, 1.0]), v(&[0.0, 1.0])).unwrap();
        let (loss, g) = zero.loss_and_subgradient(&same).unwrap();
        assert_eq!(loss, 1.0);
        assert!(g.right.is_empty());
        assert!(g.to_dense().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn from_entries_validates() {
        assert!(SimilarityModel::from_entries(2, [(0, 2, 1.0)]).is_err());
        assert!(SimilarityModel::from_entries(2, [(0, 1, 0.0)]).is_err());
        assert!(SimilarityModel::from_entries(2, [(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        let m = SimilarityModel::from_entries(2, [(1, 1, 3.0), (0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 3);
        assert_eq!(
            m.iter().collect::<Vec<_>>(),
            vec![(0, 1, 1.0), (1, 0, 2.0), (1, 1, 3.0)]
        );
    }

    #[test]
    fn add_outer_removes_cancelled_entries() {
        let mut m = SimilarityModel::identity(2);
        let u = v(&[1.0, 0.0]);
        m.add_outer(-1.0, &u, &u);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.get(1, 1), 1.0);
    }

    #[test]
    fn left_product_matches_score() {
        let m = example_model();
        let x = v(&[1.0, 2.0]);
        let y = v(&[3.0, -1.0]);
        let q = m.left_product(&x).unwrap();
        assert!((y.dot_dense(&q) - m.score(&x, &y).unwrap()).abs() < 1e-12);
    }
}
