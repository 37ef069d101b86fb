//! Sequential contrastive learning at desk scale.
//!
//! The crate is split the same way the pipeline runs:
//!
//! - [`seqdata`]: feature sequences, the `SEQF` file format, pair manifests,
//!   a synthetic paired-sequence generator and batching.
//! - [`kernels`]: sequential distances (interpolated Euclidean, soft/hard DTW,
//!   positional Sinkhorn-Wasserstein) with analytic gradients, and the batched
//!   pairwise distance matrix.
//! - [`objective`]: z-score normalization of distance matrices, the sequential
//!   (SCAV) and aggregation-based (CAV) contrastive losses, and their mix.
//! - [`encoder`]: a small trainable sequence encoder with hand-written
//!   backpropagation, AdamW, a warm-up cosine schedule and the training loop.
//! - [`retrieval`]: aggregation, sequence and hybrid retrieval, recall@R and
//!   the latency bench.
//! - [`verification`]: finite-difference gradient checking and brute-force
//!   reference distances.

pub mod encoder;
pub mod error;
pub mod kernels;
pub mod objective;
pub mod retrieval;
pub mod seqdata;
pub mod verification;

mod parallel;

pub use error::{Error, Result};
pub use kernels::{Direction, DistanceKind, DistanceMatrix, KernelGrad, Stage};
pub use seqdata::{FeatureSequence, PairManifest, PairedBatch, PairedDataset, SynthConfig};

