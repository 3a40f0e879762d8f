use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::Triplet;

/// Draws training triplets with replacement.
///
/// The anchor is uniform over items whose class has at least two members,
/// the positive is uniform over the other members of the anchor's class,
/// and the negative is uniform over all items of other classes.
#[derive(Debug, Clone)]
pub struct TripletSampler<'a> {
    source: &'a LabeledDataset,
    rng: ChaCha8Rng,
    /// Item positions grouped by class.
    grouped: Vec<usize>,
    /// For each item: (start, end) of its class block in `grouped` and its
    /// own offset inside `grouped`.
    blocks: Vec<(usize, usize, usize)>,
    /// Offsets into `grouped` of the eligible anchors.
    anchors: Vec<usize>,
}

impl<'a> TripletSampler<'a> {
    pub fn new(source: &'a LabeledDataset, seed: u64) -> Result<Self> {
        if source.num_classes() < 2 {
            return Err(Error::argument(
                "triplet sampling needs at least two classes in the training set",
            ));
        }
        let mut grouped = Vec::with_capacity(source.len());
        let mut blocks = vec![(0, 0, 0); source.len()];
        let mut anchors = Vec::new();
        for positions in source.class_index().values() {
            let start = grouped.len();
            let end = start + positions.len();
            for (k, &pos) in positions.iter().enumerate() {
                blocks[pos] = (start, end, start + k);
                if positions.len() >= 2 {
                    anchors.push(start + k);
                }
            }
            grouped.extend_from_slice(positions);
        }
        if anchors.is_empty() {
            return Err(Error::argument(
                "triplet sampling needs a class with at least two members",
            ));
        }
        Ok(Self {
            source,
            rng: ChaCha8Rng::seed_from_u64(seed),
            grouped,
            blocks,
            anchors,
        })
    }

    pub fn source(&self) -> &'a LabeledDataset {
        self.source
    }

    /// Dataset positions `(anchor, positive, negative)` of the next triplet.
    pub fn next_positions(&mut self) -> (usize, usize, usize) {
        let anchor_slot = self.anchors[self.rng.random_range(0..self.anchors.len())];
        let anchor = self.grouped[anchor_slot];
        let (start, end, own) = self.blocks[anchor];

        let mut slot = start + self.rng.random_range(0..end - start - 1);
        if slot >= own {
            slot += 1;
        }
        let positive = self.grouped[slot];

        let class_size = end - start;
        let mut slot = self.rng.random_range(0..self.grouped.len() - class_size);
        if slot >= start {
            slot += class_size;
        }
        let negative = self.grouped[slot];
        (anchor, positive, negative)
    }

    pub fn next_triplet(&mut self) -> Triplet {
        let (a, p, n) = self.next_positions();
        let ds = self.source;
        Triplet {
            anchor: ds.features(a).clone(),
            positive: ds.features(p).clone(),
            negative: ds.features(n).clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Item;
    use crate::sparse::SparseVector;

    fn dataset(labels: &[i64]) -> LabeledDataset {
        let items = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| Item {
                label,
                features: SparseVector::new(labels.len(), [(i, 1.0)]).unwrap(),
            })
            .collect();
        LabeledDataset::new(labels.len(), items).unwrap()
    }

    #[test]
    fn singleton_class_is_never_an_anchor() {
        // A = {0, 1}, B = {2}. Only (0, 1, 2) and (1, 0, 2) are possible.
        let ds = dataset(&[0, 0, 1]);
        let mut sampler = TripletSampler::new(&ds, 42).unwrap();
        let draws = 10_000;
        let mut first = 0usize;
        for _ in 0..draws {
            match sampler.next_positions() {
                (0, 1, 2) => first += 1,
                (1, 0, 2) => {}
                other => panic!("impossible triplet {other:?}"),
            }
        }
        // Binomial(10000, 1/2): within 3σ = 150 of 5000.
        let deviation = (first as f64 - draws as f64 / 2.0).abs();
        assert!(deviation <= 3.0 * (draws as f64 * 0.25).sqrt(), "{first}");
    }

    #[test]
    fn construction_errors() {
        assert!(TripletSampler::new(&dataset(&[0, 1]), 0).is_err());
        assert!(TripletSampler::new(&dataset(&[0, 0, 0]), 0).is_err());
    }

    #[test]
    fn labels_always_satisfy_triplet_relation() {
        let labels: Vec<i64> = (0..40).map(|i| (i * 7 % 5) as i64).collect();
        let ds = dataset(&labels);
        let mut sampler = TripletSampler::new(&ds, 9).unwrap();
        for _ in 0..10_000 {
            let (a, p, n) = sampler.next_positions();
            assert_ne!(a, p);
            assert_eq!(ds.label(a), ds.label(p));
            assert_ne!(ds.label(a), ds.label(n));
        }
    }

    #[test]
    fn uniform_negatives_and_positives() {
        // Class 0 has three members, class 1 two, class 2 one.
        let ds = dataset(&[0, 1, 0, 2, 1, 0]);
        let mut sampler = TripletSampler::new(&ds, 1).unwrap();
        let mut anchors = [0usize; 6];
        let mut negatives_for_0 = [0usize; 6];
        for _ in 0..60_000 {
            let (a, _, n) = sampler.next_positions();
            anchors[a] += 1;
            if ds.label(a) == 0 {
                negatives_for_0[n] += 1;
            }
        }
        // 5 eligible anchors, 12000 expected each.
        assert_eq!(anchors[3], 0);
        for &c in [0, 1, 2, 4, 5].iter().map(|i| &anchors[*i]) {
            assert!((c as f64 - 12_000.0).abs() < 3.0 * (60_000.0f64 * 0.2 * 0.8).sqrt());
        }
        // Negatives for class-0 anchors spread over items 1, 3 and 4.
        let total: usize = negatives_for_0.iter().sum();
        for i in [1, 3, 4] {
            let p = 1.0 / 3.0;
            let sd = (total as f64 * p * (1.0 - p)).sqrt();
            assert!((negatives_for_0[i] as f64 - total as f64 * p).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn seeded_streams_repeat() {
        let labels: Vec<i64> = (0..20).map(|i| i % 3).collect();
        let ds = dataset(&labels);
        let mut a = TripletSampler::new(&ds, 5).unwrap();
        let mut b = TripletSampler::new(&ds, 5).unwrap();
        for _ in 0..100 {
            assert_eq!(a.next_positions(), b.next_positions());
        }
    }
}
