//! Contrastive objectives over a batch of `B` aligned pairs.
//!
//! [`scav_loss`] contrasts pairs through a `B × B` matrix of sequential
//! distances, z-scored per row (video→audio) and per column (audio→video).
//! [`cav_loss`] is the usual symmetric InfoNCE over cosine similarities of
//! mean-pooled embeddings. Both return gradients alongside the value.

mod cav;
mod infonce;
mod scav;
mod zscore;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use cav::{cav_loss, mean_pool, PooledCosine};
pub(crate) use cav::unit_pooled;
pub use scav::scav_loss;
pub use zscore::{zscore, ZScore, ZAxis, ZSCORE_EPS};

/// A positive temperature stored as its logarithm so gradient steps cannot
/// make it non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Temperature {
    pub log_value: f64,
}

impl Temperature {
    /// Default initial value for the aggregation-based loss.
    pub const TAU_INIT: f64 = 0.07;
    /// Default initial value for the sequential loss.
    pub const LAMBDA_INIT: f64 = 1.0;

    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Temperature {
                log_value: value.ln(),
            })
        } else {
            Err(Error::InvalidArgument(format!(
                "temperature must be positive and finite, got {value}"
            )))
        }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

/// Gradients of a loss with respect to the encoded sequences of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceGrads {
    pub videos: Vec<Array2<f64>>,
    pub audios: Vec<Array2<f64>>,
}

impl SequenceGrads {
    fn scaled(&self, w: f64) -> Self {
        SequenceGrads {
            videos: self.videos.iter().map(|g| g * w).collect(),
            audios: self.audios.iter().map(|g| g * w).collect(),
        }
    }
}

/// Loss value and whichever gradients the loss produces.
///
/// The sequential loss fills `grad_distances` (∂loss/∂D) and
/// `grad_log_lambda`; the aggregation loss fills `grad_similarities`,
/// `grad_sequences` and `grad_log_tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss: f64,
    pub grad_distances: Option<Array2<f64>>,
    pub grad_similarities: Option<Array2<f64>>,
    pub grad_sequences: Option<SequenceGrads>,
    pub grad_log_lambda: f64,
    pub grad_log_tau: f64,
}

/// `w·scav + (1−w)·cav`, with every gradient scaled by its weight.
pub fn multitask_loss(scav: &LossResult, cav: &LossResult, weight: f64) -> Result<LossResult> {
    if !(0.0..=1.0).contains(&weight) {
        return Err(Error::InvalidArgument(format!(
            "multitask weight must lie in [0, 1], got {weight}"
        )));
    }
    let w_cav = 1.0 - weight;
    Ok(LossResult {
        loss: weight * scav.loss + w_cav * cav.loss,
        grad_distances: scav.grad_distances.as_ref().map(|g| g * weight),
        grad_similarities: cav.grad_similarities.as_ref().map(|g| g * w_cav),
        grad_sequences: cav.grad_sequences.as_ref().map(|g| g.scaled(w_cav)),
        grad_log_lambda: weight * scav.grad_log_lambda,
        grad_log_tau: w_cav * cav.grad_log_tau,
    })
}
