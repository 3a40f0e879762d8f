//! Sparse online learning of bilinear similarity functions from relative
//! triplets.
//!
//! The crate learns a matrix `M` so that `S_M(x, y) = xᵀ M y` ranks a
//! relevant item above an irrelevant one for every training triplet. It
//! provides proximal online learners with L1 or off-diagonal L1 penalties
//! (plain and per-coordinate adaptive), OASIS and OGD baselines, LIBSVM
//! ingestion, triplet sampling, and retrieval metrics.
//!
//! ```
//! use sors_core::{data::synth, evaluate_retrieval, Algorithm, Learner, LearnerConfig, Regularizer};
//!
//! let ds = synth::orthogonal_classes(3, 4, 10, 7).unwrap();
//! let mut sampler = sors_core::TripletSampler::new(&ds, 1).unwrap();
//! let config = LearnerConfig::new(Algorithm::Sors(Regularizer::L1), ds.dim());
//! let mut learner = Learner::new(config).unwrap();
//! for _ in 0..100 {
//!     learner.step(&sampler.next_triplet()).unwrap();
//! }
//! let report = evaluate_retrieval(learner.model(), &ds, &[1, 5]).unwrap();
//! assert!(report.map > 0.9);
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod learner;
pub mod model;
pub mod model_io;
pub mod prox;
pub mod sparse;

pub use data::{split, LabeledDataset, SplitSpec, TripletSampler};
pub use error::{Error, Result};
pub use eval::{
    average_precision, evaluate_retrieval, model_sparsity, precision_at_k, EvalReport, RegretTrace,
};
pub use learner::{run, Algorithm, Learner, LearnerConfig, LearnerState, StepRecord};
pub use model::{RankOneGradient, SimilarityModel, Triplet};
pub use model_io::{parse_model, read_model, write_model};
pub use prox::{
    prox_l1, prox_l1_adaptive, prox_l1_offdiag, soft_threshold, Accumulator, Regularizer,
};
pub use sparse::SparseVector;
