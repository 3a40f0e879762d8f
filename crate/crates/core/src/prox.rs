//! Proximal operators for the L1 and off-diagonal L1 penalties, in plain
//! and per-coordinate (accumulator-scaled) form.
//!
//! All operators run over the stored support of the model only: the prox
//! of an unstored zero is zero, so skipping those coordinates is exact.
//! Entries that threshold to exactly zero are removed from storage.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{merge_add, RankOneGradient, SimilarityModel};

/// Sparsity penalty applied by the proximal step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regularizer {
    /// `‖M‖₁`, every entry penalized.
    L1,
    /// `Σ_{i≠j} |M_ij|`, diagonal left free.
    OffDiagonalL1,
}

impl Regularizer {
    pub fn value(self, model: &SimilarityModel) -> f64 {
        match self {
            Regularizer::L1 => model.l1_norm(),
            Regularizer::OffDiagonalL1 => model.off_diagonal_l1_norm(),
        }
    }

    /// Whether entry `(row, col)` is subject to the penalty.
    #[inline]
    pub fn penalizes(self, row: usize, col: usize) -> bool {
        match self {
            Regularizer::L1 => true,
            Regularizer::OffDiagonalL1 => row != col,
        }
    }
}

/// `sign(m) · max(|m| - tau, 0)`.
#[inline]
pub fn soft_threshold(m: f64, tau: f64) -> f64 {
    let shrunk = m.abs() - tau;
    if shrunk > 0.0 {
        shrunk.copysign(m)
    } else {
        0.0
    }
}

fn check_threshold(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::argument(format!(
            "threshold must be finite and nonnegative, got {tau}"
        )))
    }
}

/// Soft-thresholds every entry of `model` by `tau`.
pub fn prox_l1(model: &SimilarityModel, tau: f64) -> Result<SimilarityModel> {
    check_threshold(tau)?;
    let mut out = model.clone();
    shrink(&mut out, tau, Regularizer::L1);
    Ok(out)
}

/// Soft-thresholds off-diagonal entries by `tau`; the diagonal is untouched.
pub fn prox_l1_offdiag(model: &SimilarityModel, tau: f64) -> Result<SimilarityModel> {
    check_threshold(tau)?;
    let mut out = model.clone();
    shrink(&mut out, tau, Regularizer::OffDiagonalL1);
    Ok(out)
}

/// Soft-thresholds entry `(i, j)` by `lambda_eta / (δ + H_ij)`.
pub fn prox_l1_adaptive(
    model: &SimilarityModel,
    lambda_eta: f64,
    sigma: &Accumulator,
    regularizer: Regularizer,
) -> Result<SimilarityModel> {
    check_dim(model.dim(), sigma.dim())?;
    check_threshold(lambda_eta)?;
    let mut out = model.clone();
    shrink_adaptive(&mut out, lambda_eta, sigma, regularizer);
    Ok(out)
}

pub(crate) fn shrink(model: &mut SimilarityModel, tau: f64, regularizer: Regularizer) {
    if tau == 0.0 {
        return;
    }
    match regularizer {
        Regularizer::L1 => model.map_in_place(|_, _, m| soft_threshold(m, tau)),
        Regularizer::OffDiagonalL1 => {
            model.map_in_place(|i, j, m| if i == j { m } else { soft_threshold(m, tau) })
        }
    }
}

pub(crate) fn shrink_adaptive(
    model: &mut SimilarityModel,
    lambda_eta: f64,
    sigma: &Accumulator,
    regularizer: Regularizer,
) {
    debug_assert_eq!(model.dim(), sigma.dim());
    if lambda_eta == 0.0 {
        return;
    }
    let delta = sigma.delta;
    model.map_rows_in_place(|i, row| {
        let h_row = &sigma.rows[i];
        let mut h = 0;
        row.retain_mut(|(j, m)| {
            if !regularizer.penalizes(i, *j) {
                return true;
            }
            while h < h_row.len() && h_row[h].0 < *j {
                h += 1;
            }
            let h_ij = match h_row.get(h) {
                Some(&(col, value)) if col == *j => value,
                _ => 0.0,
            };
            *m = soft_threshold(*m, lambda_eta / (delta + h_ij));
            *m != 0.0
        });
    });
}

/// Per-coordinate root-sum-of-squares of past gradients, `H`, with the
/// smoothing constant `δ`. The scaling matrix is `Σ = δ + H`; coordinates
/// never touched by a gradient have `Σ_ij = δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulator {
    dim: usize,
    delta: f64,
    rows: Vec<Vec<(usize, f64)>>,
    nnz: usize,
}

impl Accumulator {
    pub fn new(dim: usize, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::argument(format!(
                "smoothing delta must be positive, got {delta}"
            )));
        }
        Ok(Self {
            dim,
            delta,
            rows: vec![Vec::new(); dim],
            nnz: 0,
        })
    }

    /// Builds an accumulator with explicit `H` entries; values must be positive.
    pub fn from_entries(
        dim: usize,
        delta: f64,
        entries: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut acc = Self::new(dim, delta)?;
        let h = SimilarityModel::from_entries(dim, entries)?;
        if let Some((i, j, v)) = h.iter().find(|&(_, _, v)| v <= 0.0) {
            return Err(Error::argument(format!(
                "accumulator entry ({i}, {j}) must be positive, got {v}"
            )));
        }
        for i in 0..dim {
            acc.rows[i] = h.row(i).to_vec();
        }
        acc.nnz = h.nnz();
        Ok(acc)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of coordinates with nonzero `H`.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn is_empty(&self) -> bool {
        self.nnz == 0
    }

    pub fn h(&self, row: usize, col: usize) -> f64 {
        let entries = &self.rows[row];
        match entries.binary_search_by_key(&col, |&(c, _)| c) {
            Ok(pos) => entries[pos].1,
            Err(_) => 0.0,
        }
    }

    /// `Σ_ij = δ + H_ij`.
    pub fn sigma(&self, row: usize, col: usize) -> f64 {
        self.delta + self.h(row, col)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i, j, v)))
    }

    /// Returns a new accumulator with `H'_ij = sqrt(H_ij² + G_ij²)` over the
    /// support of `g`.
    pub fn accumulate(&self, g: &RankOneGradient) -> Result<Accumulator> {
        check_dim(self.dim, g.dim())?;
        let mut out = self.clone();
        out.accumulate_in_place(g);
        Ok(out)
    }

    pub(crate) fn accumulate_in_place(&mut self, g: &RankOneGradient) {
        if g.is_zero() {
            return;
        }
        let mut update = Vec::with_capacity(g.right.nnz());
        for (i, u) in g.left.iter() {
            let row = std::mem::take(&mut self.rows[i]);
            update.clear();
            update.extend(g.right.iter().map(|(j, v)| (j, u * v)));
            let merged = merge_root_sum_squares(&row, &update);
            self.nnz = self.nnz - row.len() + merged.len();
            self.rows[i] = merged;
        }
    }

    /// Row `row` of `H`, column-sorted.
    pub(crate) fn row(&self, row: usize) -> &[(usize, f64)] {
        &self.rows[row]
    }
}

/// Merges `sqrt(h² + g²)` over the union of two column-sorted lists.
fn merge_root_sum_squares(h: &[(usize, f64)], g: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut out = Vec::with_capacity(h.len() + g.len());
    let (mut a, mut b) = (0, 0);
    while a < h.len() || b < g.len() {
        let next = match (h.get(a), g.get(b)) {
            (Some(&(i, hv)), Some(&(j, gv))) => match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a += 1;
                    (i, hv)
                }
                std::cmp::Ordering::Greater => {
                    b += 1;
                    (j, gv.abs())
                }
                std::cmp::Ordering::Equal => {
                    a += 1;
                    b += 1;
                    (i, (hv * hv + gv * gv).sqrt())
                }
            },
            (Some(&entry), None) => {
                a += 1;
                entry
            }
            (None, Some(&(j, gv))) => {
                b += 1;
                (j, gv.abs())
            }
            (None, None) => unreachable!(),
        };
        if next.1 > 0.0 {
            out.push(next);
        }
    }
    out
}

/// `M ← M − η · (G ./ Σ)` evaluated over the support of `G` only.
pub(crate) fn scaled_gradient_step(
    model: &mut SimilarityModel,
    eta: f64,
    g: &RankOneGradient,
    sigma: &Accumulator,
) {
    let mut buf = Vec::with_capacity(g.right.nnz());
    for (i, u) in g.left.iter() {
        let h_row = sigma.row(i);
        let mut h = 0;
        buf.clear();
        for (j, v) in g.right.iter() {
            while h < h_row.len() && h_row[h].0 < j {
                h += 1;
            }
            let h_ij = match h_row.get(h) {
                Some(&(col, value)) if col == j => value,
                _ => 0.0,
            };
            buf.push((j, -eta * (u * v) / (sigma.delta + h_ij)));
        }
        let merged = merge_add(model.row(i), &buf);
        model.set_row(i, merged);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseVector;

    fn m2(values: [f64; 4]) -> SimilarityModel {
        SimilarityModel::from_dense(2, &values).unwrap()
    }

    fn assert_dense_eq(actual: &SimilarityModel, expected: &[f64]) {
        let dense = actual.to_dense();
        for (a, e) in dense.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{dense:?} != {expected:?}");
        }
    }

    #[test]
    fn prox_l1_examples() {
        let m = m2([2.0, -0.5, 0.3, 1.0]);
        // Per-entry scalar oracle: sign(m) max(|m| - tau, 0).
        let oracle: Vec<f64> = m
            .to_dense()
            .iter()
            .map(|&x| {
                if x.abs() > 0.4 {
                    x.signum() * (x.abs() - 0.4)
                } else {
                    0.0
                }
            })
            .collect();
        let out = prox_l1(&m, 0.4).unwrap();
        assert_dense_eq(&out, &oracle);
        assert_dense_eq(&out, &[1.6, -0.1, 0.0, 0.6]);
        assert_eq!(out.nnz(), 3);

        assert_eq!(prox_l1(&m, 0.0).unwrap(), m);
        assert_eq!(prox_l1(&m, 2.0).unwrap().nnz(), 0);
        assert!(prox_l1(&m, -0.1).is_err());
    }

    #[test]
    fn prox_offdiag_examples() {
        let m = m2([2.0, -0.5, 0.3, 1.0]);
        let out = prox_l1_offdiag(&m, 0.4).unwrap();
        assert_dense_eq(&out, &[2.0, -0.1, 0.0, 1.0]);
        assert_eq!(out.get(0, 0).to_bits(), 2.0f64.to_bits());

        let diag = m2([3.0, 0.0, 0.0, -0.1]);
        assert_eq!(prox_l1_offdiag(&diag, 10.0).unwrap(), diag);
        assert_eq!(prox_l1_offdiag(&m, 0.0).unwrap(), m);
        assert!(prox_l1_offdiag(&m, -1.0).is_err());
    }

    #[test]
    fn prox_adaptive_examples() {
        let m = SimilarityModel::from_dense(1, &[1.0]).unwrap();
        let sigma = Accumulator::new(1, 2.0).unwrap();
        let out = prox_l1_adaptive(&m, 1.0, &sigma, Regularizer::L1).unwrap();
        assert_dense_eq(&out, &[0.5]);

        assert_eq!(
            prox_l1_adaptive(&m, 0.0, &sigma, Regularizer::L1).unwrap(),
            m
        );

        // A huge accumulated H drives the effective threshold towards zero.
        let lambda_eta = 1.0;
        let big = Accumulator::from_entries(1, 2.0, [(0, 0, 1e7)]).unwrap();
        assert!(lambda_eta / big.sigma(0, 0) < 1e-6);
        let out = prox_l1_adaptive(&m, lambda_eta, &big, Regularizer::L1).unwrap();
        assert!((out.get(0, 0) - 1.0).abs() < 1e-6);

        let wrong = Accumulator::new(2, 1.0).unwrap();
        assert!(matches!(
            prox_l1_adaptive(&m, 1.0, &wrong, Regularizer::L1),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn prox_adaptive_uses_per_entry_threshold() {
        let m = m2([1.0, 1.0, 1.0, 1.0]);
        let sigma = Accumulator::from_entries(2, 1.0, [(0, 1, 1.0), (1, 0, 3.0)]).unwrap();
        let out = prox_l1_adaptive(&m, 0.8, &sigma, Regularizer::L1).unwrap();
        assert_dense_eq(&out, &[0.2, 0.6, 0.8, 0.2]);
        let out = prox_l1_adaptive(&m, 0.8, &sigma, Regularizer::OffDiagonalL1).unwrap();
        assert_dense_eq(&out, &[1.0, 0.6, 0.8, 1.0]);
    }

    fn gradient(left: &[f64], right: &[f64]) -> RankOneGradient {
        RankOneGradient {
            left: SparseVector::from_dense(left).unwrap(),
            right: SparseVector::from_dense(right).unwrap(),
        }
    }

    #[test]
    fn accumulate_examples() {
        let h = Accumulator::from_entries(2, 1.0, [(0, 0, 3.0)]).unwrap();
        let g = gradient(&[4.0, 0.0], &[1.0, 0.0]);
        assert_eq!(h.accumulate(&g).unwrap().h(0, 0), 5.0);

        let empty = RankOneGradient::zero(2);
        assert_eq!(h.accumulate(&empty).unwrap(), h);

        let fresh = Accumulator::new(2, 1.0).unwrap();
        let g = gradient(&[0.0, 2.0], &[0.0, -1.0]);
        let out = fresh.accumulate(&g).unwrap();
        assert_eq!(out.h(1, 1), 2.0);
        assert_eq!(out.nnz(), 1);

        assert!(fresh.accumulate(&RankOneGradient::zero(3)).is_err());
        assert!(Accumulator::new(2, 0.0).is_err());
    }

    #[test]
    fn scaled_step_divides_by_sigma() {
        let mut m = SimilarityModel::identity(2);
        let sigma = Accumulator::from_entries(2, 1.0, [(0, 1, 3.0)]).unwrap();
        let g = gradient(&[1.0, 0.0], &[1.0, 2.0]);
        scaled_gradient_step(&mut m, 0.5, &g, &sigma);
        assert_dense_eq(&m, &[0.5, -0.25, 0.0, 1.0]);
    }
}
