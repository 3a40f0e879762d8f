//! Labeled datasets, splitting, and triplet sampling.

mod libsvm;
mod sampler;
mod split;
pub mod synth;

use std::collections::BTreeMap;

use crate::error::{check_dim, Error, Result};
use crate::sparse::SparseVector;

pub use libsvm::{parse_libsvm, read_libsvm_file, write_libsvm, ParseOptions, ZeroPolicy};
pub use sampler::TripletSampler;
pub use split::{split, SplitSpec};

/// One labeled instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Item {
    pub label: i64,
    pub features: SparseVector,
}

/// Items of a common dimension, indexed by class.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    items: Vec<Item>,
    class_index: BTreeMap<i64, Vec<usize>>,
}

impl LabeledDataset {
    pub fn new(dim: usize, items: Vec<Item>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::argument("dataset dimension must be positive"));
        }
        let mut class_index: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (pos, item) in items.iter().enumerate() {
            check_dim(dim, item.features.dim())?;
            class_index.entry(item.label).or_default().push(pos);
        }
        Ok(Self {
            dim,
            items,
            class_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, pos: usize) -> &Item {
        &self.items[pos]
    }

    pub fn label(&self, pos: usize) -> i64 {
        self.items[pos].label
    }

    pub fn features(&self, pos: usize) -> &SparseVector {
        &self.items[pos].features
    }

    /// Item positions per label, labels ascending, positions ascending.
    pub fn class_index(&self) -> &BTreeMap<i64, Vec<usize>> {
        &self.class_index
    }

    pub fn num_classes(&self) -> usize {
        self.class_index.len()
    }

    /// The items at `positions`, in that order.
    pub fn subset(&self, positions: &[usize]) -> LabeledDataset {
        let items = positions.iter().map(|&p| self.items[p].clone()).collect();
        LabeledDataset::new(self.dim, items).expect("subset of a valid dataset is valid")
    }
}
