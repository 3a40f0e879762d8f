//! Seeded synthetic datasets and triplet streams.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{Item, LabeledDataset};
use crate::error::{Error, Result};
use crate::model::{SimilarityModel, Triplet};
use crate::sparse::SparseVector;

/// Classes supported on disjoint feature blocks.
///
/// Class `c` lives on features `[c·block, (c+1)·block)`; each item has
/// random positive values on every feature of its block. Items of different
/// classes are orthogonal, so the identity model ranks perfectly.
pub fn orthogonal_classes(
    classes: usize,
    block: usize,
    per_class: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if classes == 0 || block == 0 {
        return Err(Error::argument("classes and block size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = classes * block;
    let mut items = Vec::with_capacity(classes * per_class);
    for c in 0..classes {
        for _ in 0..per_class {
            let entries: Vec<(usize, f64)> = (0..block)
                .map(|k| (c * block + k, rng.random_range(0.5..1.5)))
                .collect();
            items.push(Item {
                label: c as i64,
                features: SparseVector::new(dim, entries)?,
            });
        }
    }
    LabeledDataset::new(dim, items)
}

/// Parameters for [`sparse_classes`].
#[derive(Debug, Clone)]
pub struct SparseClassesSpec {
    pub dim: usize,
    pub classes: usize,
    pub per_class: usize,
    /// Fraction of the `dim` features present in each item.
    pub density: f64,
    /// Size of each class's pool of characteristic features.
    pub pool_size: usize,
    /// Fraction of an item's features drawn from its class pool; the rest are
    /// uniform over all features.
    pub signal_fraction: f64,
    pub seed: u64,
}

impl Default for SparseClassesSpec {
    fn default() -> Self {
        Self {
            dim: 2_000,
            classes: 5,
            per_class: 200,
            density: 0.01,
            pool_size: 60,
            signal_fraction: 0.5,
            seed: 0,
        }
    }
}

/// High-dimensional sparse classes with noisy, overlapping supports.
///
/// Every item has `round(density · dim)` nonzero features with values in
/// `[0.5, 1.5)`, normalized to unit length. Part of the support comes from
/// a class-specific pool, the rest is uniform noise, so the identity model
/// ranks imperfectly and learning has something to fix.
pub fn sparse_classes(spec: &SparseClassesSpec) -> Result<LabeledDataset> {
    let nnz = ((spec.density * spec.dim as f64).round() as usize).max(1);
    if spec.dim == 0 || spec.classes < 2 || nnz > spec.dim || spec.pool_size > spec.dim {
        return Err(Error::argument("invalid sparse dataset specification"));
    }
    if !(0.0..=1.0).contains(&spec.signal_fraction) {
        return Err(Error::argument("signal fraction must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pools: Vec<Vec<usize>> = (0..spec.classes)
        .map(|_| sample(&mut rng, spec.dim, spec.pool_size).into_vec())
        .collect();
    let from_pool = ((spec.signal_fraction * nnz as f64).round() as usize).min(spec.pool_size);

    let mut items = Vec::with_capacity(spec.classes * spec.per_class);
    for (c, pool) in pools.iter().enumerate() {
        for _ in 0..spec.per_class {
            let mut support: Vec<usize> = sample(&mut rng, pool.len(), from_pool)
                .into_iter()
                .map(|k| pool[k])
                .collect();
            while support.len() < nnz {
                let f = rng.random_range(0..spec.dim);
                if !support.contains(&f) {
                    support.push(f);
                }
            }
            support.sort_unstable();
            let mut values: Vec<f64> = support.iter().map(|_| rng.random_range(0.5..1.5)).collect();
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            values.iter_mut().for_each(|v| *v /= norm);
            items.push(Item {
                label: c as i64,
                features: SparseVector::new(spec.dim, support.into_iter().zip(values))?,
            });
        }
    }
    LabeledDataset::new(spec.dim, items)
}

/// Parameters for [`planted_stream`].
#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub dim: usize,
    /// Nonzeros per generated vector.
    pub vector_nnz: usize,
    /// Off-diagonal nonzeros in the planted model, besides its diagonal.
    pub model_nnz: usize,
    /// Required score gap `S*(x, x⁺) − S*(x, x⁻)`.
    pub margin: f64,
    pub seed: u64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        Self {
            dim: 10,
            vector_nnz: 3,
            model_nnz: 12,
            margin: 1.0,
            seed: 0,
        }
    }
}

/// A planted model `M*` and a generator of triplets it separates with at
/// least the requested margin, so `ℓ_t(M*) = 0` on every emitted triplet.
#[derive(Debug, Clone)]
pub struct PlantedStream {
    planted: SimilarityModel,
    spec: PlantedSpec,
    rng: ChaCha8Rng,
}

pub fn planted_stream(spec: PlantedSpec) -> Result<PlantedStream> {
    if spec.dim == 0 || spec.vector_nnz == 0 || spec.vector_nnz > spec.dim {
        return Err(Error::argument("invalid planted stream specification"));
    }
    if spec.margin.is_nan() || spec.margin <= 0.0 {
        return Err(Error::argument("margin must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let off_diagonal = spec.dim * (spec.dim - 1);
    let picks = sample(&mut rng, off_diagonal, spec.model_nnz.min(off_diagonal));
    let mut entries: Vec<(usize, usize, f64)> = (0..spec.dim)
        .map(|i| (i, i, 1.0 + rng.random_range(0.0..2.0)))
        .collect();
    for k in picks {
        let (i, mut j) = (k / (spec.dim - 1), k % (spec.dim - 1));
        if j >= i {
            j += 1;
        }
        let mut value: f64 = 2.0 * normal.sample(&mut rng);
        if value == 0.0 {
            value = 1.0;
        }
        entries.push((i, j, value));
    }
    let planted = SimilarityModel::from_entries(spec.dim, entries)?;
    Ok(PlantedStream { planted, spec, rng })
}

impl PlantedStream {
    pub fn planted(&self) -> &SimilarityModel {
        &self.planted
    }

    fn vector(&mut self) -> SparseVector {
        let mut support = sample(&mut self.rng, self.spec.dim, self.spec.vector_nnz).into_vec();
        support.sort_unstable();
        let entries: Vec<(usize, f64)> = support
            .into_iter()
            .map(|i| {
                let magnitude = self.rng.random_range(0.5..1.5);
                let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (i, sign * magnitude)
            })
            .collect();
        SparseVector::new(self.spec.dim, entries).expect("valid generated vector")
    }

    /// Next triplet; candidates whose gap under `M*` is below the margin are
    /// rejected, and the pair is ordered so the gap is positive.
    pub fn next_triplet(&mut self) -> Triplet {
        loop {
            let anchor = self.vector();
            let a = self.vector();
            let b = self.vector();
            let sa = self.planted.score(&anchor, &a).expect("dims match");
            let sb = self.planted.score(&anchor, &b).expect("dims match");
            if (sa - sb).abs() < self.spec.margin {
                continue;
            }
            let (positive, negative) = if sa > sb { (a, b) } else { (b, a) };
            return Triplet {
                anchor,
                positive,
                negative,
            };
        }
    }

    pub fn take(&mut self, count: usize) -> Vec<Triplet> {
        (0..count).map(|_| self.next_triplet()).collect()
    }
}
