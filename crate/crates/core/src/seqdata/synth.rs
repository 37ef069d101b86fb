//! Seeded paired-sequence generator.
//!
//! Each pair shares a latent trajectory: a Gaussian random walk whose frame
//! `t` (1-based) is divided by `√t`, so neighbouring frames are correlated
//! and every frame has unit variance. The video and audio streams resample
//! that trajectory to their own lengths, then apply a fixed per-modality
//! random projection and additive noise.

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{save_manifest, save_seqf, FeatureSequence, PairManifest, PairRecord, PairedDataset};
use crate::kernels::linear_interp;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    /// Fixed Gaussian matrices, one per modality, scaled by `1/√latent_dim`.
    Random,
    /// Identity maps; requires `dim_v == dim_a == latent_dim`.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_pairs: usize,
    pub dim_v: usize,
    pub dim_a: usize,
    pub latent_dim: usize,
    pub len_v: usize,
    pub len_a: usize,
    pub noise_std: f64,
    pub seed: u64,
    /// Weight ρ of a dataset-wide latent shared by every pair.
    pub distractor_correlation: f64,
    pub projection: Projection,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_pairs: 256,
            dim_v: 32,
            dim_a: 24,
            latent_dim: 8,
            len_v: 16,
            len_a: 10,
            noise_std: 0.3,
            seed: 0,
            distractor_correlation: 0.0,
            projection: Projection::Random,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.len_v < 2 || self.len_a < 2 {
            return bad(format!("lengths must be >= 2, got {} and {}", self.len_v, self.len_a));
        }
        if self.dim_v == 0 || self.dim_a == 0 || self.latent_dim == 0 {
            return bad("dimensions must be >= 1".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be >= 0, got {}", self.noise_std));
        }
        if !(0.0..1.0).contains(&self.distractor_correlation) {
            return bad(format!(
                "distractor_correlation must lie in [0, 1), got {}",
                self.distractor_correlation
            ));
        }
        if self.projection == Projection::Identity
            && (self.dim_v != self.latent_dim || self.dim_a != self.latent_dim)
        {
            return bad("identity projection needs dim_v == dim_a == latent_dim".into());
        }
        Ok(())
    }

    pub fn pair_id(i: usize) -> String {
        format!("pair{i:05}")
    }
}

fn gaussian(rng: &mut ChaCha8Rng, shape: (usize, usize), scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    })
}

fn smoothed_walk(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Array2<f64> {
    let mut z = gaussian(rng, (len, dim), 1.0);
    z.accumulate_axis_inplace(Axis(0), |&prev, cur| *cur += prev);
    for (t, mut row) in z.outer_iter_mut().enumerate() {
        row /= ((t + 1) as f64).sqrt();
    }
    z
}

fn projection(rng: &mut ChaCha8Rng, kind: Projection, latent: usize, dim: usize) -> Array2<f64> {
    match kind {
        Projection::Identity => Array2::eye(latent),
        Projection::Random => gaussian(rng, (latent, dim), 1.0 / (latent as f64).sqrt()),
    }
}

fn observe(
    rng: &mut ChaCha8Rng,
    latent: &Array2<f64>,
    len: usize,
    proj: &Array2<f64>,
    noise_std: f64,
) -> Array2<f64> {
    let mut out = linear_interp(latent.view(), len).dot(proj);
    if noise_std > 0.0 {
        out += &gaussian(rng, out.dim(), noise_std);
    }
    out
}

/// Generates the dataset in memory. A pure function of `cfg`.
pub fn synthesize(cfg: &SynthConfig) -> Result<PairedDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let proj_v = projection(&mut rng, cfg.projection, cfg.latent_dim, cfg.dim_v);
    let proj_a = projection(&mut rng, cfg.projection, cfg.latent_dim, cfg.dim_a);
    let steps = cfg.len_v.max(cfg.len_a);
    let rho = cfg.distractor_correlation;
    let shared = (rho > 0.0).then(|| smoothed_walk(&mut rng, steps, cfg.latent_dim));

    let mut data = PairedDataset::default();
    for i in 0..cfg.num_pairs {
        let mut z = smoothed_walk(&mut rng, steps, cfg.latent_dim);
        if let Some(shared) = &shared {
            z = z * (1.0 - rho * rho).sqrt() + shared * rho;
        }
        let video = observe(&mut rng, &z, cfg.len_v, &proj_v, cfg.noise_std);
        let audio = observe(&mut rng, &z, cfg.len_a, &proj_a, cfg.noise_std);
        let id = SynthConfig::pair_id(i);
        data.push(
            id.clone(),
            FeatureSequence::from_f64(id.clone(), &video)?,
            FeatureSequence::from_f64(id, &audio)?,
        );
    }
    Ok(data)
}

/// Writes `video/<id>.seqf`, `audio/<id>.seqf` and `manifest.tsv` under
/// `out_dir` and returns the manifest.
pub fn gen_synthetic(cfg: &SynthConfig, out_dir: impl AsRef<Path>) -> Result<PairManifest> {
    let out_dir = out_dir.as_ref();
    let data = synthesize(cfg)?;
    for sub in ["video", "audio"] {
        let dir = out_dir.join(sub);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let mut manifest = PairManifest {
        records: Vec::with_capacity(data.len()),
        base_dir: out_dir.to_path_buf(),
    };
    for ((id, video), audio) in data.ids.iter().zip(&data.videos).zip(&data.audios) {
        let rec = PairRecord {
            id: id.clone(),
            video: Path::new("video").join(format!("{id}.seqf")),
            audio: Path::new("audio").join(format!("{id}.seqf")),
        };
        save_seqf(video, out_dir.join(&rec.video))?;
        save_seqf(audio, out_dir.join(&rec.audio))?;
        manifest.records.push(rec);
    }
    save_manifest(&manifest, out_dir.join("manifest.tsv"))?;
    Ok(manifest)
}
