//! Fixed workloads shared by the benchmarks.

use sors_core::data::synth::{self, SparseClassesSpec};
use sors_core::{LabeledDataset, Learner, LearnerConfig, SimilarityModel, Triplet, TripletSampler};

/// A sparse labelled dataset of dimension `dim` with 1% feature density.
pub fn sparse_dataset(dim: usize, per_class: usize) -> LabeledDataset {
    synth::sparse_classes(&SparseClassesSpec {
        dim,
        per_class,
        seed: 42,
        ..Default::default()
    })
    .expect("valid synthetic spec")
}

pub fn triplet_stream(ds: &LabeledDataset, len: usize) -> Vec<Triplet> {
    let mut sampler = TripletSampler::new(ds, 7).expect("dataset has several classes");
    (0..len).map(|_| sampler.next_triplet()).collect()
}

/// A learner that has already consumed `warmup`, so its model has a
/// realistic support size.
pub fn warmed_learner(config: LearnerConfig, warmup: &[Triplet]) -> Learner {
    let mut learner = Learner::new(config).expect("valid config");
    for t in warmup {
        learner.step(t).expect("matching dimensions");
    }
    learner
}

pub fn warmed_model(config: LearnerConfig, warmup: &[Triplet]) -> SimilarityModel {
    warmed_learner(config, warmup).into_state().model
}
