#![allow(dead_code)]

use scav::encoder::{LossKind, TrainConfig};
use scav::{Direction, DistanceKind, Stage, SynthConfig};

pub const TRAIN_PAIRS: usize = 512;
pub const TEST_PAIRS: usize = 256;

/// The mechanism benchmark: high-dimensional noisy streams around a
/// 16-dimensional latent, with a dataset-wide shared component.
pub fn benchmark_synth(num_pairs: usize) -> SynthConfig {
    SynthConfig {
        num_pairs,
        dim_v: 96,
        dim_a: 64,
        latent_dim: 16,
        noise_std: 1.5,
        distractor_correlation: 0.6,
        seed: 0,
        ..SynthConfig::default()
    }
}

pub fn benchmark_train(loss: LossKind) -> TrainConfig {
    TrainConfig {
        loss,
        distance: DistanceKind::eucl(Direction::V2A, Stage::Pre),
        batch_size: 32,
        steps: 300,
        warmup_steps: 15,
        ..TrainConfig::default()
    }
}
