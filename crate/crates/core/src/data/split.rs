use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::error::{Error, Result};

/// Per-class train/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            train_fraction,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(Error::argument(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )))
        }
    }

    /// Number of training items for a class of size `n`: `ceil(fraction · n)`.
    pub fn train_count(&self, n: usize) -> usize {
        // Guard against products such as 0.7 * 20 landing a hair above the integer.
        let exact = self.train_fraction * n as f64;
        let rounded = exact.round();
        let count = if (exact - rounded).abs() < 1e-9 {
            rounded
        } else {
            exact.ceil()
        };
        (count as usize).min(n)
    }
}

/// Splits every class independently: its items are shuffled with a seeded
/// generator and the first `ceil(fraction · n_c)` go to the training set.
/// Both outputs keep the original item order.
pub fn split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for positions in ds.class_index().values() {
        let mut shuffled = positions.clone();
        shuffled.shuffle(&mut rng);
        let n_train = spec.train_count(shuffled.len());
        train.extend_from_slice(&shuffled[..n_train]);
        test.extend_from_slice(&shuffled[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}
