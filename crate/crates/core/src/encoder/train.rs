use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optim::{adam_step, cosine_lr, AdamHyper, AdamState};
use super::{EncoderDims, EncoderParams};
use crate::kernels::{linear_interp, pairwise_with_grads, Direction, DistanceKind, Stage};
use crate::objective::{cav_loss, multitask_loss, scav_loss, Temperature};
use crate::parallel::with_workers;
use crate::retrieval::{evaluate, RetrievalDirection, RetrievalMode};
use crate::seqdata::{batch_indices, PairedDataset};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Cav,
    Scav,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub distance: DistanceKind,
    pub batch_size: usize,
    pub steps: usize,
    pub base_lr: f64,
    pub warmup_steps: usize,
    pub adam: AdamHyper,
    pub seed: u64,
    pub tau_init: f64,
    pub lambda_init: f64,
    pub normalize_distances: bool,
    /// Weight of the sequential loss under [`LossKind::Multi`].
    pub multitask_weight: f64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    /// Worker cap for the batch distance matrix. Results do not depend on it.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::Scav,
            distance: DistanceKind::eucl(Direction::V2A, Stage::Pre),
            batch_size: 32,
            steps: 2000,
            base_lr: 7e-4,
            warmup_steps: 100,
            adam: AdamHyper::default(),
            seed: 0,
            tau_init: Temperature::TAU_INIT,
            lambda_init: Temperature::LAMBDA_INIT,
            normalize_distances: true,
            multitask_weight: 0.5,
            hidden_dim: 64,
            latent_dim: 32,
            workers: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.steps == 0 {
            return bad("steps must be >= 1".into());
        }
        if self.batch_size < 2 {
            return bad(format!("batch size must be >= 2, got {}", self.batch_size));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("base learning rate must be positive, got {}", self.base_lr));
        }
        if self.warmup_steps >= self.steps && self.warmup_steps > 0 {
            return bad(format!(
                "warmup ({}) must be shorter than the run ({} steps)",
                self.warmup_steps, self.steps
            ));
        }
        for (name, b) in [("beta1", self.adam.beta1), ("beta2", self.adam.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam.weight_decay >= 0.0 && self.adam.weight_decay.is_finite()) {
            return bad(format!("weight decay must be >= 0, got {}", self.adam.weight_decay));
        }
        Temperature::new(self.tau_init)?;
        Temperature::new(self.lambda_init)?;
        if !(0.0..=1.0).contains(&self.multitask_weight) {
            return bad(format!("multitask weight must lie in [0, 1], got {}", self.multitask_weight));
        }
        if self.hidden_dim == 0 || self.latent_dim == 0 {
            return bad("hidden and latent widths must be >= 1".into());
        }
        self.distance.validate()?;
        if self.loss != LossKind::Cav && !self.distance.is_differentiable() {
            return bad(format!("{} has no gradient and cannot be trained with", self.distance.name()));
        }
        Ok(())
    }
}

/// Resamples raw features before encoding when the distance asks for
/// pre-interpolation; otherwise returns the pair unchanged.
pub fn prepare_pair(kind: &DistanceKind, video: Array2<f64>, audio: Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    match *kind {
        DistanceKind::EuclInterp {
            stage: Stage::Pre,
            direction: Direction::V2A,
        } => (linear_interp(video.view(), audio.nrows()), audio),
        DistanceKind::EuclInterp {
            stage: Stage::Pre,
            direction: Direction::A2V,
        } => {
            let audio = linear_interp(audio.view(), video.nrows());
            (video, audio)
        }
        _ => (video, audio),
    }
}

/// Prepared 64-bit copies of every pair.
fn prepare_dataset(kind: &DistanceKind, data: &PairedDataset) -> (Vec<Array2<f64>>, Vec<Array2<f64>>) {
    data.videos
        .iter()
        .zip(&data.audios)
        .map(|(v, a)| prepare_pair(kind, v.to_f64(), a.to_f64()))
        .unzip()
}

/// Encoded videos and audios, index-aligned.
pub type EncodedPairs = (Vec<Array2<f64>>, Vec<Array2<f64>>);

/// Trained encoders and temperatures, plus the configuration that made them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: TrainConfig,
    pub params: EncoderParams,
    pub lambda: Temperature,
    pub tau: Temperature,
}

impl Model {
    /// Prepares and encodes every pair of `data`.
    pub fn encode_pairs(&self, data: &PairedDataset, workers: Option<usize>) -> Result<EncodedPairs> {
        let (videos, audios) = prepare_dataset(&self.config.distance, data);
        with_workers(workers, || {
            let hv = videos
                .par_iter()
                .map(|v| self.params.video.encode(v.view()))
                .collect::<Result<Vec<_>>>()?;
            let ha = audios
                .par_iter()
                .map(|a| self.params.audio.encode(a.view()))
                .collect::<Result<Vec<_>>>()?;
            Ok((hv, ha))
        })
    }
}

/// Loss of one batch and its gradients.
#[derive(Debug, Clone)]
pub struct BatchGrads {
    pub loss: f64,
    pub params: EncoderParams,
    pub log_lambda: f64,
    pub log_tau: f64,
}

/// Encodes a batch of prepared pairs, evaluates the configured loss and
/// backpropagates to every encoder parameter and both log-temperatures.
pub fn batch_loss(
    params: &EncoderParams,
    lambda: Temperature,
    tau: Temperature,
    videos: &[Array2<f64>],
    audios: &[Array2<f64>],
    cfg: &TrainConfig,
) -> Result<BatchGrads> {
    let b = videos.len();
    if audios.len() != b {
        return Err(Error::ShapeMismatch(format!("{b} videos but {} audios", audios.len())));
    }
    let hv = videos.iter().map(|v| params.video.encode(v.view())).collect::<Result<Vec<_>>>()?;
    let ha = audios.iter().map(|a| params.audio.encode(a.view())).collect::<Result<Vec<_>>>()?;

    let sequential = match cfg.loss {
        LossKind::Cav => None,
        _ => {
            let (d, kgrads) = pairwise_with_grads(&hv, &ha, &cfg.distance, cfg.workers)?;
            Some((scav_loss(&d.values, lambda, cfg.normalize_distances)?, kgrads))
        }
    };
    let aggregated = match cfg.loss {
        LossKind::Scav => None,
        _ => Some(cav_loss(&hv, &ha, tau)?),
    };
    let (result, kgrads) = match (sequential, aggregated) {
        (Some((s, k)), None) => (s, Some(k)),
        (None, Some(c)) => (c, None),
        (Some((s, k)), Some(c)) => (multitask_loss(&s, &c, cfg.multitask_weight)?, Some(k)),
        (None, None) => unreachable!("every loss kind has a term"),
    };

    let mut gv: Vec<Array2<f64>> = hv.iter().map(|h| Array2::zeros(h.raw_dim())).collect();
    let mut ga: Vec<Array2<f64>> = ha.iter().map(|h| Array2::zeros(h.raw_dim())).collect();
    if let (Some(gd), Some(kgrads)) = (&result.grad_distances, &kgrads) {
        for i in 0..b {
            for j in 0..b {
                let w = gd[[i, j]];
                gv[i].scaled_add(w, &kgrads[i * b + j].grad_x);
                ga[j].scaled_add(w, &kgrads[i * b + j].grad_y);
            }
        }
    }
    if let Some(gs) = &result.grad_sequences {
        for (g, s) in gv.iter_mut().zip(&gs.videos) {
            *g += s;
        }
        for (g, s) in ga.iter_mut().zip(&gs.audios) {
            *g += s;
        }
    }

    let mut grads = params.zeros_like();
    for (x, g) in videos.iter().zip(&gv) {
        let (pg, _) = params.video.encode_backward(x.view(), g.view())?;
        grads.video.add_scaled(1.0, &pg);
    }
    for (x, g) in audios.iter().zip(&ga) {
        let (pg, _) = params.audio.encode_backward(x.view(), g.view())?;
        grads.audio.add_scaled(1.0, &pg);
    }
    Ok(BatchGrads {
        loss: result.loss,
        params: grads,
        log_lambda: result.grad_log_lambda,
        log_tau: result.grad_log_tau,
    })
}

/// Recall@1 of the trained model on a held-out set, both directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub agg_a2v: f64,
    pub agg_v2a: f64,
    pub seq_a2v: f64,
    pub seq_v2a: f64,
}

impl EvalMetrics {
    /// Aggregation and sequence retrieval with the training distance.
    pub fn compute(model: &Model, data: &PairedDataset, workers: Option<usize>) -> Result<Self> {
        let (hv, ha) = model.encode_pairs(data, workers)?;
        let positives: Vec<usize> = (0..data.len()).collect();
        let r1 = |mode: RetrievalMode, direction| -> Result<f64> {
            let (q, c) = match direction {
                RetrievalDirection::V2A => (&hv, &ha),
                RetrievalDirection::A2V => (&ha, &hv),
            };
            Ok(evaluate(q, c, &positives, &mode, direction, workers)?.recall[0])
        };
        let seq = RetrievalMode::Seq {
            kind: model.config.distance,
        };
        Ok(EvalMetrics {
            agg_a2v: r1(RetrievalMode::Agg, RetrievalDirection::A2V)?,
            agg_v2a: r1(RetrievalMode::Agg, RetrievalDirection::V2A)?,
            seq_a2v: r1(seq, RetrievalDirection::A2V)?,
            seq_v2a: r1(seq, RetrievalDirection::V2A)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// Loss of the batch seen at each step, before that step's update.
    pub losses: Vec<f64>,
    pub model: Model,
    pub elapsed_s: f64,
    pub eval: Option<EvalMetrics>,
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains both encoders and the temperatures on `data`. Each epoch visits a
/// fresh seeded permutation in batches of `B`, dropping the remainder. The
/// run is a pure function of `data` and `cfg`.
pub fn train(data: &PairedDataset, validation: Option<&PairedDataset>, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let (videos, audios) = prepare_dataset(&cfg.distance, data);
    let (video_in, audio_in) = data.dims()?;
    let mut max_len = videos.iter().chain(&audios).map(|s| s.nrows()).max().unwrap_or(0);
    if let Some(val) = validation {
        max_len = max_len.max(val.max_len());
    }
    let dims = EncoderDims {
        video_in,
        audio_in,
        hidden: cfg.hidden_dim,
        latent: cfg.latent_dim,
        max_len,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = EncoderParams::init(&mut rng, &dims)?;
    let mut temps = [cfg.lambda_init.ln(), cfg.tau_init.ln()];
    let mut moments: Vec<AdamState> = params.slices_mut().iter().map(|s| AdamState::zeros(s.len())).collect();
    let mut temp_moments = AdamState::zeros(2);
    let no_decay = AdamHyper {
        weight_decay: 0.0,
        ..cfg.adam
    };

    let per_epoch = data.len() / cfg.batch_size;
    let mut order = Vec::new();
    let mut losses = Vec::with_capacity(cfg.steps);
    for step in 1..=cfg.steps {
        let slot = (step - 1) % per_epoch.max(1);
        if slot == 0 {
            order = batch_indices(data.len(), cfg.batch_size, epoch_seed(cfg.seed, (step - 1) / per_epoch.max(1)), true)?;
        }
        let idx = &order[slot];
        let bv: Vec<Array2<f64>> = idx.iter().map(|&i| videos[i].clone()).collect();
        let ba: Vec<Array2<f64>> = idx.iter().map(|&i| audios[i].clone()).collect();
        let lambda = Temperature { log_value: temps[0] };
        let tau = Temperature { log_value: temps[1] };
        let out = batch_loss(&params, lambda, tau, &bv, &ba, cfg)?;
        if !out.loss.is_finite() || !temps.iter().all(|t| t.is_finite()) {
            return Err(Error::NonFiniteLoss {
                step,
                lambda: lambda.value(),
                tau: tau.value(),
            });
        }
        losses.push(out.loss);

        let lr = cosine_lr(step, cfg.base_lr, cfg.warmup_steps, cfg.steps);
        let mut grads = out.params;
        for ((p, g), m) in params.slices_mut().into_iter().zip(grads.slices_mut()).zip(&mut moments) {
            adam_step(p, g, m, step, lr, &cfg.adam);
        }
        let temp_grads = match cfg.loss {
            LossKind::Cav => [0.0, out.log_tau],
            LossKind::Scav => [out.log_lambda, 0.0],
            LossKind::Multi => [out.log_lambda, out.log_tau],
        };
        adam_step(&mut temps, &temp_grads, &mut temp_moments, step, lr, &no_decay);
    }

    let model = Model {
        config: cfg.clone(),
        params,
        lambda: Temperature { log_value: temps[0] },
        tau: Temperature { log_value: temps[1] },
    };
    let eval = validation
        .map(|val| EvalMetrics::compute(&model, val, cfg.workers))
        .transpose()?;
    Ok(TrainReport {
        losses,
        model,
        elapsed_s: start.elapsed().as_secs_f64(),
        eval,
    })
}
