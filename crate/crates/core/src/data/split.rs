use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::model::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub repeat_index: u64,
}

impl SplitSpec {
    pub fn new(seed: u64, repeat_index: u64) -> Self {
        Self {
            train_fraction: 0.5,
            seed,
            repeat_index,
        }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.repeat_index);
        rng
    }
}

/// Seeded Fisher–Yates permutation of `0..n`; the first `⌈fraction·n⌉`
/// indices are the training set.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(DataError::Invalid(format!(
            "train fraction must lie in (0, 1), got {f}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut spec.rng());
    let n_train = ((f * n as f64).ceil() as usize).min(n);
    let test = perm.split_off(n_train);
    Ok((perm, test))
}

pub fn split(samples: &SampleSet, spec: &SplitSpec) -> Result<(SampleSet, SampleSet), DataError> {
    let (train, test) = split_indices(samples.len(), spec)?;
    Ok((samples.subset(&train), samples.subset(&test)))
}
