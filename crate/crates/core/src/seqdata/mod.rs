//! Feature sequences, on-disk formats, synthetic data and batching.

mod batch;
mod manifest;
mod seqf;
mod synth;

use ndarray::Array2;

use crate::{Error, Result};

pub use batch::{batch_indices, make_batches, PairedBatch};
pub use manifest::{load_manifest, save_manifest, PairManifest, PairRecord};
pub use seqf::{decode_seqf, encode_seqf, load_seqf, save_seqf, SEQF_MAGIC, SEQF_VERSION};
pub use synth::{gen_synthetic, synthesize, Projection, SynthConfig};

/// One modality's time-major `T × c` feature matrix, stored as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    id: String,
    data: Array2<f32>,
}

impl FeatureSequence {
    pub fn new(id: impl Into<String>, data: Array2<f32>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidArgument("sequence id must be non-empty".into()));
        }
        if id.len() > u16::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "sequence id is {} bytes, limit is {}",
                id.len(),
                u16::MAX
            )));
        }
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::ShapeMismatch(format!(
                "sequence {id} has shape {:?}; need at least one frame and one channel",
                data.dim()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sequence {id}, element {pos}")));
        }
        Ok(FeatureSequence { id, data })
    }

    /// Rounds 64-bit values to the 32-bit storage type.
    pub fn from_f64(id: impl Into<String>, data: &Array2<f64>) -> Result<Self> {
        Self::new(id, data.mapv(|v| v as f32))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn data(&self) -> &Array2<f32> {
        &self.data
    }

    /// Number of frames `T`.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Channel count `c`.
    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    /// Promotes the stored values to 64-bit for kernel arithmetic.
    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }
}

/// Aligned (video, audio) pairs: `videos[i]` belongs with `audios[i]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairedDataset {
    pub ids: Vec<String>,
    pub videos: Vec<FeatureSequence>,
    pub audios: Vec<FeatureSequence>,
}

impl PairedDataset {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: String, video: FeatureSequence, audio: FeatureSequence) {
        self.ids.push(id);
        self.videos.push(video);
        self.audios.push(audio);
    }

    /// First `n` pairs and the rest.
    pub fn split_at(&self, n: usize) -> (PairedDataset, PairedDataset) {
        let n = n.min(self.len());
        let head = PairedDataset {
            ids: self.ids[..n].to_vec(),
            videos: self.videos[..n].to_vec(),
            audios: self.audios[..n].to_vec(),
        };
        let tail = PairedDataset {
            ids: self.ids[n..].to_vec(),
            videos: self.videos[n..].to_vec(),
            audios: self.audios[n..].to_vec(),
        };
        (head, tail)
    }

    pub fn max_len(&self) -> usize {
        self.videos
            .iter()
            .chain(&self.audios)
            .map(FeatureSequence::len)
            .max()
            .unwrap_or(0)
    }

    /// Channel counts of the video and audio streams, checked to be uniform.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let dim_of = |seqs: &[FeatureSequence], what: &str| -> Result<usize> {
            let d = seqs.first().map(FeatureSequence::dim).unwrap_or(0);
            if let Some(bad) = seqs.iter().find(|s| s.dim() != d) {
                return Err(Error::ShapeMismatch(format!(
                    "{what} {} has {} channels, expected {d}",
                    bad.id(),
                    bad.dim()
                )));
            }
            Ok(d)
        };
        Ok((dim_of(&self.videos, "video")?, dim_of(&self.audios, "audio")?))
    }
}

#[cfg(test)]
mod tests {
    use ndarray::array;

    use super::*;

    #[test]
    fn rejects_bad_sequences() {
        assert!(FeatureSequence::new("", array![[0.0f32]]).is_err());
        assert!(FeatureSequence::new("a", Array2::<f32>::zeros((0, 3))).is_err());
        assert!(FeatureSequence::new("a", Array2::<f32>::zeros((3, 0))).is_err());
        assert!(matches!(
            FeatureSequence::new("a", array![[1.0f32, f32::INFINITY]]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn promotes_exactly() {
        let s = FeatureSequence::new("a", array![[0.1f32, -3.5]]).unwrap();
        assert_eq!(s.to_f64()[[0, 0]], 0.1f32 as f64);
        assert_eq!((s.len(), s.dim()), (1, 2));
    }
}
