//! Retrieval and model-quality metrics.
//!
//! Retrieval is evaluated test-against-test: each item queries all other
//! items, candidates are ranked by bilinear score (ties broken by ascending
//! position) and a candidate is relevant when it shares the query's label.

use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{check_dim, Error, Result};
use crate::model::{SimilarityModel, Triplet};
use crate::prox::Regularizer;

/// `1 − nnz(M) / d²`.
pub fn model_sparsity(m: &SimilarityModel) -> f64 {
    let cells = (m.dim() as f64) * (m.dim() as f64);
    1.0 - m.nnz() as f64 / cells
}

/// Average precision of a ranked relevance list, or `None` when nothing in
/// it is relevant.
pub fn average_precision(ranking: &[bool]) -> Option<f64> {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (p, &relevant) in ranking.iter().enumerate() {
        if relevant {
            hits += 1;
            sum += hits as f64 / (p + 1) as f64;
        }
    }
    (hits > 0).then(|| sum / hits as f64)
}

/// Relevant items among the first `k`, divided by `k` even when the ranking
/// is shorter than `k`.
pub fn precision_at_k(ranking: &[bool], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::argument("precision@k needs k >= 1"));
    }
    let hits = ranking.iter().take(k).filter(|&&r| r).count();
    Ok(hits as f64 / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionAtK {
    pub k: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map: f64,
    pub precision_at_k: Vec<PrecisionAtK>,
    pub sparsity: f64,
    /// Queries with at least one relevant candidate; only these are averaged.
    pub query_count: usize,
    pub wall_time_seconds: f64,
}

impl EvalReport {
    /// CSV header matching [`EvalReport::csv_row`].
    pub fn csv_header(&self) -> String {
        let mut cols = vec!["map".to_string(), "sparsity".into(), "query_count".into()];
        cols.extend(self.precision_at_k.iter().map(|p| format!("p@{}", p.k)));
        cols.push("wall_time_seconds".into());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut cols = vec![
            self.map.to_string(),
            self.sparsity.to_string(),
            self.query_count.to_string(),
        ];
        cols.extend(self.precision_at_k.iter().map(|p| p.precision.to_string()));
        cols.push(format!("{:.3}", self.wall_time_seconds));
        cols.join(",")
    }
}

/// Relevance flags of all other test items for query `q`, best score first.
pub fn rank_for_query(m: &SimilarityModel, test: &LabeledDataset, q: usize) -> Result<Vec<bool>> {
    let query = test.item(q);
    let left = m.left_product(&query.features)?;
    let mut scored: Vec<(f64, usize)> = test
        .items()
        .iter()
        .enumerate()
        .filter(|&(pos, _)| pos != q)
        .map(|(pos, item)| (item.features.dot_dense(&left), pos))
        .collect();
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });
    Ok(scored
        .into_iter()
        .map(|(_, pos)| test.label(pos) == query.label)
        .collect())
}

/// Sorts and deduplicates cutoffs, rejecting `k = 0`.
pub fn normalize_ks(ks: &[usize]) -> Result<Vec<usize>> {
    if ks.contains(&0) {
        return Err(Error::argument("precision@k cutoffs must be >= 1"));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

/// MAP and precision@k over every test item as a query.
pub fn evaluate_retrieval(
    m: &SimilarityModel,
    test: &LabeledDataset,
    ks: &[usize],
) -> Result<EvalReport> {
    check_dim(m.dim(), test.dim())?;
    if test.is_empty() {
        return Err(Error::argument("test set is empty"));
    }
    let ks = normalize_ks(ks)?;

    let start = Instant::now();
    let per_query: Vec<Option<(f64, Vec<f64>)>> = (0..test.len())
        .into_par_iter()
        .map(|q| -> Result<_> {
            let ranking = rank_for_query(m, test, q)?;
            let Some(ap) = average_precision(&ranking) else {
                return Ok(None);
            };
            let precisions = ks
                .iter()
                .map(|&k| precision_at_k(&ranking, k))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some((ap, precisions)))
        })
        .collect::<Result<_>>()?;
    let elapsed = start.elapsed().as_secs_f64();

    let mut query_count = 0usize;
    let mut ap_sum = 0.0;
    let mut p_sums = vec![0.0; ks.len()];
    for (ap, precisions) in per_query.into_iter().flatten() {
        query_count += 1;
        ap_sum += ap;
        for (s, p) in p_sums.iter_mut().zip(precisions) {
            *s += p;
        }
    }
    if query_count == 0 {
        return Err(Error::NoRelevantQueries);
    }
    let n = query_count as f64;
    Ok(EvalReport {
        map: ap_sum / n,
        precision_at_k: ks
            .iter()
            .zip(p_sums)
            .map(|(&k, s)| PrecisionAtK {
                k,
                precision: s / n,
            })
            .collect(),
        sparsity: model_sparsity(m),
        query_count,
        wall_time_seconds: (elapsed * 1000.0).round() / 1000.0,
    })
}

/// Per-step online objectives `ℓ_t(M_t) + λ r(M_t)` and, optionally, the
/// total objective of a fixed reference model on the same stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretTrace {
    pub objectives: Vec<f64>,
    pub reference_objective: Option<f64>,
}

impl RegretTrace {
    pub fn new(objectives: Vec<f64>) -> Self {
        Self {
            objectives,
            reference_objective: None,
        }
    }

    pub fn with_reference(mut self, reference_objective: f64) -> Self {
        self.reference_objective = Some(reference_objective);
        self
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.objectives.iter().sum()
    }

    /// Online total minus the reference total.
    pub fn regret_vs_reference(&self) -> Result<f64> {
        let reference = self.reference_objective.ok_or_else(|| {
            Error::argument("regret needs a reference objective; none was supplied")
        })?;
        Ok(self.total() - reference)
    }

    /// Mean objective over the first `steps` rounds.
    pub fn mean_objective(&self, steps: usize) -> f64 {
        let steps = steps.min(self.objectives.len());
        if steps == 0 {
            return 0.0;
        }
        self.objectives[..steps].iter().sum::<f64>() / steps as f64
    }
}

/// `Σ_t ℓ_t(M) + λ r(M)` of one fixed model over a stream.
pub fn reference_objective<'a>(
    m: &SimilarityModel,
    stream: impl IntoIterator<Item = &'a Triplet>,
    lambda: f64,
    regularizer: Option<Regularizer>,
) -> Result<f64> {
    let penalty = match regularizer {
        Some(r) => lambda * r.value(m),
        None => 0.0,
    };
    let mut total = 0.0;
    for t in stream {
        total += m.hinge_loss(t)? + penalty;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth, Item};
    use crate::sparse::SparseVector;

    #[test]
    fn sparsity_examples() {
        let m = SimilarityModel::from_dense(2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(model_sparsity(&m), 0.75);
        assert_eq!(model_sparsity(&SimilarityModel::zeros(4)), 1.0);
        let full = SimilarityModel::from_dense(3, &[1.0; 9]).unwrap();
        assert_eq!(model_sparsity(&full), 0.0);
    }

    #[test]
    fn average_precision_examples() {
        let ap = average_precision(&[true, false, true]).unwrap();
        assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&[true; 4]), Some(1.0));
        assert_eq!(
            average_precision(&[false, false, false, false, true]),
            Some(0.2)
        );
        assert_eq!(average_precision(&[false, false]), None);
    }

    #[test]
    fn precision_at_k_examples() {
        assert_eq!(precision_at_k(&[true, false, true, false], 2).unwrap(), 0.5);
        assert_eq!(precision_at_k(&[false, true, false], 10).unwrap(), 0.1);
        assert_eq!(precision_at_k(&[false; 5], 3).unwrap(), 0.0);
        assert!(precision_at_k(&[true], 0).is_err());
    }

    fn item(label: i64, values: &[f64]) -> Item {
        Item {
            label,
            features: SparseVector::from_dense(values).unwrap(),
        }
    }

    #[test]
    fn two_same_class_items_give_perfect_map() {
        let test =
            LabeledDataset::new(2, vec![item(1, &[1.0, 0.0]), item(1, &[0.5, 0.5])]).unwrap();
        let report = evaluate_retrieval(&SimilarityModel::identity(2), &test, &[1]).unwrap();
        assert_eq!(report.map, 1.0);
        assert_eq!(report.query_count, 2);
    }

    #[test]
    fn no_relevant_candidates_is_an_error() {
        let test =
            LabeledDataset::new(2, vec![item(1, &[1.0, 0.0]), item(2, &[0.0, 1.0])]).unwrap();
        assert!(matches!(
            evaluate_retrieval(&SimilarityModel::identity(2), &test, &[1]),
            Err(Error::NoRelevantQueries)
        ));
    }

    #[test]
    fn orthogonal_classes_rank_perfectly_under_identity() {
        let test = synth::orthogonal_classes(3, 4, 6, 2).unwrap();
        let m = SimilarityModel::identity(test.dim());
        // Brute-force oracle: every query's same-class items score > 0 and
        // others exactly 0, so each ranking is relevant-first.
        for q in 0..test.len() {
            let ranking = rank_for_query(&m, &test, q).unwrap();
            let first_irrelevant = ranking.iter().position(|r| !r).unwrap();
            assert!(ranking[first_irrelevant..].iter().all(|r| !r));
        }
        let report = evaluate_retrieval(&m, &test, &[1, 5, 10]).unwrap();
        assert_eq!(report.map, 1.0);
        assert_eq!(report.precision_at_k[0].precision, 1.0);
        assert_eq!(report.precision_at_k[1].precision, 1.0);
        // Only 5 relevant candidates per query, so p@10 = 0.5.
        assert_eq!(report.precision_at_k[2].precision, 0.5);
    }

    #[test]
    fn ties_break_by_position() {
        let test = LabeledDataset::new(
            2,
            vec![
                item(1, &[1.0, 0.0]),
                item(2, &[0.0, 1.0]),
                item(1, &[0.0, 1.0]),
            ],
        )
        .unwrap();
        // Query 0 scores both candidates 0 under I: item 1 (irrelevant) first.
        let ranking = rank_for_query(&SimilarityModel::identity(2), &test, 0).unwrap();
        assert_eq!(ranking, vec![false, true]);
    }

    #[test]
    fn regret_examples() {
        let trace = RegretTrace::new(vec![0.5, 0.25]);
        assert!(trace.regret_vs_reference().is_err());
        assert_eq!(
            trace
                .clone()
                .with_reference(0.75)
                .regret_vs_reference()
                .unwrap(),
            0.0
        );
        let zeros = RegretTrace::new(vec![0.0; 4]).with_reference(2.0);
        assert_eq!(zeros.regret_vs_reference().unwrap(), -2.0);
    }

    #[test]
    fn ks_are_normalized() {
        assert_eq!(normalize_ks(&[10, 1, 5, 1]).unwrap(), vec![1, 5, 10]);
        assert!(normalize_ks(&[0, 1]).is_err());
    }
}
