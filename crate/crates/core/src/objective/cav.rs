use ndarray::{Array1, Array2, Axis};

use super::infonce::{log_temperature_grad, symmetric_infonce};
use super::{LossResult, SequenceGrads, Temperature};
use crate::{Error, Result};

/// Temporal mean of a `T × c` sequence.
pub fn mean_pool(seq: &Array2<f64>) -> Array1<f64> {
    seq.mean_axis(Axis(0)).expect("sequence has at least one frame")
}

/// Cosine similarities between mean-pooled video and audio embeddings.
#[derive(Debug, Clone)]
pub struct PooledCosine {
    /// `sims[i][j]` = cos(pool(video i), pool(audio j)).
    pub sims: Array2<f64>,
    unit_v: Array2<f64>,
    unit_a: Array2<f64>,
    norm_v: Array1<f64>,
    norm_a: Array1<f64>,
    len_v: Vec<usize>,
    len_a: Vec<usize>,
}

/// Unit-normalized pooled embeddings, one per row.
pub(crate) fn unit_pooled(seqs: &[Array2<f64>]) -> Result<(Array2<f64>, Array1<f64>)> {
    let c = seqs.first().map_or(0, |s| s.ncols());
    let mut unit = Array2::zeros((seqs.len(), c));
    let mut norms = Array1::zeros(seqs.len());
    for (i, s) in seqs.iter().enumerate() {
        if s.ncols() != c {
            return Err(Error::ShapeMismatch(format!(
                "sequence {i} has {} channels, expected {c}",
                s.ncols()
            )));
        }
        let p = mean_pool(s);
        let n = p.dot(&p).sqrt();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm(i));
        }
        unit.row_mut(i).assign(&(p / n));
        norms[i] = n;
    }
    Ok((unit, norms))
}

impl PooledCosine {
    pub fn new(videos: &[Array2<f64>], audios: &[Array2<f64>]) -> Result<Self> {
        let (unit_v, norm_v) = unit_pooled(videos)?;
        let (unit_a, norm_a) = unit_pooled(audios)?;
        if unit_v.ncols() != unit_a.ncols() {
            return Err(Error::ShapeMismatch("video and audio widths differ".into()));
        }
        Ok(PooledCosine {
            sims: unit_v.dot(&unit_a.t()),
            unit_v,
            unit_a,
            norm_v,
            norm_a,
            len_v: videos.iter().map(|s| s.nrows()).collect(),
            len_a: audios.iter().map(|s| s.nrows()).collect(),
        })
    }

    /// Pulls ∂f/∂sims back to every frame of every input sequence.
    pub fn backward(&self, grad_sims: &Array2<f64>) -> SequenceGrads {
        let g_unit_v = grad_sims.dot(&self.unit_a);
        let g_unit_a = grad_sims.t().dot(&self.unit_v);
        let back = |g_unit: &Array2<f64>, unit: &Array2<f64>, norms: &Array1<f64>, lens: &[usize]| {
            lens.iter()
                .enumerate()
                .map(|(i, &t)| {
                    let g = g_unit.row(i);
                    let u = unit.row(i);
                    // d(p/|p|) = (I − u uᵀ)/|p|, then the mean spreads 1/T over frames.
                    let g_pool = (&g - &(&u * g.dot(&u))) / norms[i];
                    let frame = g_pool / t as f64;
                    let mut out = Array2::zeros((t, frame.len()));
                    out.rows_mut().into_iter().for_each(|mut r| r.assign(&frame));
                    out
                })
                .collect()
        };
        SequenceGrads {
            videos: back(&g_unit_v, &self.unit_v, &self.norm_v, &self.len_v),
            audios: back(&g_unit_a, &self.unit_a, &self.norm_a, &self.len_a),
        }
    }
}

/// Aggregation-based contrastive loss with temperature `tau`.
pub fn cav_loss(h_v: &[Array2<f64>], h_a: &[Array2<f64>], tau: Temperature) -> Result<LossResult> {
    let b = h_v.len();
    if b < 2 || h_a.len() != b {
        return Err(Error::ShapeMismatch(format!(
            "cav_loss needs B >= 2 aligned pairs, got {} videos and {} audios",
            b,
            h_a.len()
        )));
    }
    let cos = PooledCosine::new(h_v, h_a)?;
    let t = tau.value();
    let logits = cos.sims.mapv(|s| s / t);
    let (loss, g_row, g_col) = symmetric_infonce(&logits, &logits);
    let g_logits = g_row + g_col;
    let grad_log_tau = log_temperature_grad(&logits, &g_logits);
    let grad_sims = g_logits.mapv(|g| g / t);
    let grad_sequences = cos.backward(&grad_sims);
    Ok(LossResult {
        loss,
        grad_distances: None,
        grad_similarities: Some(grad_sims),
        grad_sequences: Some(grad_sequences),
        grad_log_lambda: 0.0,
        grad_log_tau,
    })
}
