use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureSequence, PairedDataset};
use crate::{Error, Result};

/// `B` aligned pairs: `videos[i]` goes with `audios[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedBatch {
    pub ids: Vec<String>,
    pub videos: Vec<FeatureSequence>,
    pub audios: Vec<FeatureSequence>,
}

impl PairedBatch {
    pub fn gather(data: &PairedDataset, indices: &[usize]) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a batch needs at least 2 pairs, got {}",
                indices.len()
            )));
        }
        Ok(PairedBatch {
            ids: indices.iter().map(|&i| data.ids[i].clone()).collect(),
            videos: indices.iter().map(|&i| data.videos[i].clone()).collect(),
            audios: indices.iter().map(|&i| data.audios[i].clone()).collect(),
        })
    }

    pub fn size(&self) -> usize {
        self.ids.len()
    }
}

/// Splits `0..n` into `⌊n/B⌋` disjoint batches of size `B`, dropping the
/// remainder. With `shuffle`, the order is a seeded permutation.
pub fn batch_indices(n: usize, batch_size: usize, seed: u64, shuffle: bool) -> Result<Vec<Vec<usize>>> {
    if batch_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "batch size must be >= 2, got {batch_size}"
        )));
    }
    if batch_size > n {
        return Err(Error::InvalidArgument(format!(
            "batch size {batch_size} exceeds dataset size {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok(order
        .chunks_exact(batch_size)
        .map(<[usize]>::to_vec)
        .collect())
}

pub fn make_batches(
    data: &PairedDataset,
    batch_size: usize,
    seed: u64,
    shuffle: bool,
) -> Result<Vec<PairedBatch>> {
    batch_indices(data.len(), batch_size, seed, shuffle)?
        .iter()
        .map(|idx| PairedBatch::gather(data, idx))
        .collect()
}
