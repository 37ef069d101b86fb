//! Trainable per-modality sequence encoders.
//!
//! Each modality has its own [`ModalityEncoder`]: a learned additive
//! positional table, a width-3 depthwise temporal convolution (zero-padded),
//! then a per-frame `tanh` MLP into the shared latent width `c`. Backward
//! passes are written out by hand. [`train`] runs the contrastive training
//! loop with AdamW and a warm-up cosine schedule.

mod checkpoint;
mod optim;
mod train;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, CKPT_MAGIC, CKPT_VERSION};
pub use optim::{adam_step, cosine_lr, AdamHyper, AdamState, ADAM_EPS};
pub use train::{
    batch_loss, prepare_pair, train, BatchGrads, EncodedPairs, EvalMetrics, LossKind, Model, TrainConfig, TrainReport,
};

/// Scale of the uniform initialization of the positional table.
pub const POS_INIT_SCALE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Video,
    Audio,
}

/// Shapes of both encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderDims {
    pub video_in: usize,
    pub audio_in: usize,
    pub hidden: usize,
    pub latent: usize,
    pub max_len: usize,
}

/// Parameters of one modality's encoder. The same struct holds gradients
/// and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityEncoder {
    /// `max_len × c_in`, row `t` is added to frame `t`.
    pub pos: Array2<f64>,
    /// `3 × c_in`; rows are the taps applied to frames `t−1`, `t`, `t+1`.
    pub conv: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Tensor names in storage order.
pub const TENSOR_NAMES: [&str; 6] = ["pos", "conv", "w1", "b1", "w2", "b2"];

fn uniform(rng: &mut ChaCha8Rng, shape: (usize, usize), scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-scale..scale))
}

struct Forward {
    u: Array2<f64>,
    v: Array2<f64>,
    h: Array2<f64>,
    out: Array2<f64>,
}

impl ModalityEncoder {
    /// Identity temporal kernel, small uniform projections, zero biases.
    pub fn init(rng: &mut ChaCha8Rng, c_in: usize, hidden: usize, latent: usize, max_len: usize) -> Self {
        let mut conv = Array2::zeros((3, c_in));
        conv.row_mut(1).fill(1.0);
        ModalityEncoder {
            pos: uniform(rng, (max_len, c_in), POS_INIT_SCALE),
            conv,
            w1: uniform(rng, (c_in, hidden), 1.0 / (c_in as f64).sqrt()),
            b1: Array1::zeros(hidden),
            w2: uniform(rng, (hidden, latent), 1.0 / (hidden as f64).sqrt()),
            b2: Array1::zeros(latent),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModalityEncoder {
            pos: Array2::zeros(self.pos.raw_dim()),
            conv: Array2::zeros(self.conv.raw_dim()),
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.raw_dim()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.raw_dim()),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.pos.ncols()
    }

    pub fn max_len(&self) -> usize {
        self.pos.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.w2.ncols()
    }

    /// `(name, (rows, cols), values)` per tensor; biases are `1 × n`.
    pub fn tensors<'a>(&'a self) -> [(&'static str, (usize, usize), &'a [f64]); 6] {
        let m = |a: &'a Array2<f64>| (TENSOR_NAMES[0], a.dim(), a.as_slice().expect("contiguous"));
        let v = |a: &'a Array1<f64>| (TENSOR_NAMES[0], (1, a.len()), a.as_slice().expect("contiguous"));
        let mut out = [
            m(&self.pos),
            m(&self.conv),
            m(&self.w1),
            v(&self.b1),
            m(&self.w2),
            v(&self.b2),
        ];
        for (slot, name) in out.iter_mut().zip(TENSOR_NAMES) {
            slot.0 = name;
        }
        out
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.pos.as_slice_mut().expect("contiguous"),
            self.conv.as_slice_mut().expect("contiguous"),
            self.w1.as_slice_mut().expect("contiguous"),
            self.b1.as_slice_mut().expect("contiguous"),
            self.w2.as_slice_mut().expect("contiguous"),
            self.b2.as_slice_mut().expect("contiguous"),
        ]
    }

    fn check_input(&self, x: ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "encoder expects {} input channels, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::ShapeMismatch("cannot encode an empty sequence".into()));
        }
        if x.nrows() > self.max_len() {
            return Err(Error::InvalidArgument(format!(
                "sequence length {} exceeds the positional table ({})",
                x.nrows(),
                self.max_len()
            )));
        }
        Ok(())
    }

    fn forward(&self, x: ArrayView2<f64>) -> Result<Forward> {
        self.check_input(x)?;
        let t = x.nrows();
        let u = &x + &self.pos.slice(s![..t, ..]);
        let mut v = &u * &self.conv.row(1);
        for i in 0..t {
            if i > 0 {
                let prev = &u.row(i - 1) * &self.conv.row(0);
                v.row_mut(i).scaled_add(1.0, &prev);
            }
            if i + 1 < t {
                let next = &u.row(i + 1) * &self.conv.row(2);
                v.row_mut(i).scaled_add(1.0, &next);
            }
        }
        let h = (v.dot(&self.w1) + &self.b1).mapv(f64::tanh);
        let out = h.dot(&self.w2) + &self.b2;
        Ok(Forward { u, v, h, out })
    }

    /// Encodes a `T × c_in` sequence into `T × c`.
    pub fn encode(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward(x)?.out)
    }

    /// Reverse-mode gradients of [`encode`](Self::encode) given ∂f/∂output.
    /// Returns `(parameter grads, input grad)`.
    pub fn encode_backward(
        &self,
        x: ArrayView2<f64>,
        upstream: ArrayView2<f64>,
    ) -> Result<(ModalityEncoder, Array2<f64>)> {
        let fwd = self.forward(x)?;
        if upstream.dim() != fwd.out.dim() {
            return Err(Error::ShapeMismatch(format!(
                "upstream gradient has shape {:?}, output is {:?}",
                upstream.dim(),
                fwd.out.dim()
            )));
        }
        let t = x.nrows();
        let mut grads = self.zeros_like();
        grads.b2 = upstream.sum_axis(Axis(0));
        grads.w2 = fwd.h.t().dot(&upstream);
        let mut ga = upstream.dot(&self.w2.t());
        ga.zip_mut_with(&fwd.h, |g, &h| *g *= 1.0 - h * h);
        grads.b1 = ga.sum_axis(Axis(0));
        grads.w1 = fwd.v.t().dot(&ga);
        let gv = ga.dot(&self.w1.t());

        let mut gu = &gv * &self.conv.row(1);
        for i in 0..t {
            let mut g1 = grads.conv.row_mut(1);
            g1 += &(&gv.row(i) * &fwd.u.row(i));
            if i > 0 {
                let g0 = &gv.row(i) * &fwd.u.row(i - 1);
                grads.conv.row_mut(0).scaled_add(1.0, &g0);
                let back = &gv.row(i - 1) * &self.conv.row(2);
                gu.row_mut(i).scaled_add(1.0, &back);
            }
            if i + 1 < t {
                let g2 = &gv.row(i) * &fwd.u.row(i + 1);
                grads.conv.row_mut(2).scaled_add(1.0, &g2);
                let fwd_tap = &gv.row(i + 1) * &self.conv.row(0);
                gu.row_mut(i).scaled_add(1.0, &fwd_tap);
            }
        }
        grads.pos.slice_mut(s![..t, ..]).assign(&gu);
        Ok((grads, gu))
    }

    /// `self += alpha · other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &ModalityEncoder) {
        for (dst, (_, _, src)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }
}

/// Video and audio encoders.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub video: ModalityEncoder,
    pub audio: ModalityEncoder,
}

impl EncoderParams {
    pub fn init(rng: &mut ChaCha8Rng, dims: &EncoderDims) -> Result<Self> {
        if [dims.video_in, dims.audio_in, dims.hidden, dims.latent, dims.max_len].contains(&0) {
            return Err(Error::InvalidArgument(format!("encoder dimensions must be >= 1: {dims:?}")));
        }
        let video = ModalityEncoder::init(rng, dims.video_in, dims.hidden, dims.latent, dims.max_len);
        let audio = ModalityEncoder::init(rng, dims.audio_in, dims.hidden, dims.latent, dims.max_len);
        Ok(EncoderParams { video, audio })
    }

    pub fn zeros_like(&self) -> Self {
        EncoderParams {
            video: self.video.zeros_like(),
            audio: self.audio.zeros_like(),
        }
    }

    pub fn dims(&self) -> EncoderDims {
        EncoderDims {
            video_in: self.video.input_dim(),
            audio_in: self.audio.input_dim(),
            hidden: self.video.w1.ncols(),
            latent: self.video.latent_dim(),
            max_len: self.video.max_len(),
        }
    }

    pub fn modality(&self, m: Modality) -> &ModalityEncoder {
        match m {
            Modality::Video => &self.video,
            Modality::Audio => &self.audio,
        }
    }

    pub fn modality_mut(&mut self, m: Modality) -> &mut ModalityEncoder {
        match m {
            Modality::Video => &mut self.video,
            Modality::Audio => &mut self.audio,
        }
    }

    pub fn encode(&self, x: ArrayView2<f64>, m: Modality) -> Result<Array2<f64>> {
        self.modality(m).encode(x)
    }

    /// All tensors, prefixed `video.` or `audio.`.
    pub fn named_tensors(&self) -> Vec<(String, (usize, usize), &[f64])> {
        let mut out = Vec::with_capacity(12);
        for (prefix, enc) in [("video", &self.video), ("audio", &self.audio)] {
            for (name, shape, data) in enc.tensors() {
                out.push((format!("{prefix}.{name}"), shape, data));
            }
        }
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let EncoderParams { video, audio } = self;
        video.tensors_mut().into_iter().chain(audio.tensors_mut()).collect()
    }

    pub fn num_params(&self) -> usize {
        self.named_tensors().iter().map(|(_, _, d)| d.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, _, d)| d.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::SeedableRng;

    use super::*;
    use crate::kernels::test_util::random_seq;
    use crate::verification::{numeric_gradient, relative_error};

    fn encoder(seed: u64, c_in: usize) -> ModalityEncoder {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = ModalityEncoder::init(&mut rng, c_in, 6, 4, 8);
        // Non-trivial temporal taps so the conv path is exercised.
        e.conv = uniform(&mut rng, (3, c_in), 1.0);
        e.b1 = uniform(&mut rng, (1, 6), 0.5).row(0).to_owned();
        e.b2 = uniform(&mut rng, (1, 4), 0.5).row(0).to_owned();
        e
    }

    #[test]
    fn zero_everything_gives_zero_latent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut e = ModalityEncoder::init(&mut rng, 3, 5, 2, 4);
        e.pos.fill(0.0);
        let out = e.encode(Array2::zeros((4, 3)).view()).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_conv_is_a_no_op() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let e = ModalityEncoder::init(&mut rng, 3, 5, 2, 6);
        let x = random_seq(&mut rng, 5, 3);
        let u = &x + &e.pos.slice(s![..5, ..]);
        let expected = (u.dot(&e.w1) + &e.b1).mapv(f64::tanh).dot(&e.w2) + &e.b2;
        assert_eq!(e.encode(x.view()).unwrap(), expected);
    }

    #[test]
    fn appending_a_frame_only_changes_the_tail() {
        let e = encoder(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let long = random_seq(&mut rng, 6, 3);
        let short = long.slice(s![..5, ..]).to_owned();
        let a = e.encode(short.view()).unwrap();
        let b = e.encode(long.view()).unwrap();
        // The conv sees one frame ahead, so only the last row of the short
        // encoding may differ.
        assert_eq!(a.slice(s![..4, ..]), b.slice(s![..4, ..]));
        assert_ne!(a.row(4), b.row(4));
    }

    #[test]
    fn too_long_or_wrong_width_is_rejected() {
        let e = encoder(5, 3);
        assert!(matches!(
            e.encode(Array2::zeros((9, 3)).view()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            e.encode(Array2::zeros((2, 4)).view()),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            e.encode_backward(Array2::zeros((2, 3)).view(), Array2::zeros((3, 4)).view()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let e = encoder(6, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_seq(&mut rng, 4, 3);
        let (g, gx) = e.encode_backward(x.view(), Array2::zeros((4, 4)).view()).unwrap();
        assert!(g.tensors().iter().all(|(_, _, d)| d.iter().all(|&v| v == 0.0)));
        assert!(gx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unused_positional_rows_get_no_gradient() {
        let e = encoder(8, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_seq(&mut rng, 3, 3);
        let up = random_seq(&mut rng, 3, 4);
        let (g, _) = e.encode_backward(x.view(), up.view()).unwrap();
        assert!(g.pos.slice(s![3.., ..]).iter().all(|&v| v == 0.0));
        assert!(g.pos.slice(s![..3, ..]).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn backward_matches_finite_differences_on_two_frames() {
        let e = encoder(10, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_seq(&mut rng, 2, 3);
        let up = random_seq(&mut rng, 2, 4);
        let (g, gx) = e.encode_backward(x.view(), up.view()).unwrap();

        let objective = |enc: &ModalityEncoder, input: &Array2<f64>| {
            (enc.encode(input.view()).unwrap() * &up).sum()
        };
        for (k, (name, _, analytic)) in g.tensors().into_iter().enumerate() {
            let point = e.tensors()[k].2.to_vec();
            let numeric = numeric_gradient(
                |p| {
                    let mut probe = e.clone();
                    probe.tensors_mut()[k].copy_from_slice(p);
                    objective(&probe, &x)
                },
                &point,
                1e-5,
                None,
            )
            .unwrap();
            for (a, n) in analytic.iter().zip(&numeric) {
                assert!(relative_error(*a, *n) < 1e-6 || (a - n).abs() < 1e-9, "{name}: {a} vs {n}");
            }
        }
        let numeric = numeric_gradient(
            |p| objective(&e, &Array2::from_shape_vec((2, 3), p.to_vec()).unwrap()),
            x.as_slice().unwrap(),
            1e-5,
            None,
        )
        .unwrap();
        for (a, n) in gx.iter().zip(&numeric) {
            assert!(relative_error(*a, *n) < 1e-6, "input: {a} vs {n}");
        }
    }
}
