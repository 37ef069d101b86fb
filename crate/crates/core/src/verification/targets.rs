//! Registry of gradient-check targets.
//!
//! Each target builds a seeded random instance, computes the analytic
//! gradient of a scalar function of a flat parameter vector and compares it
//! with central differences at a set of coordinates. Vector-valued maps are
//! reduced to a scalar with fixed random weights. Inputs are scaled to unit
//! RMS.

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gradcheck::{compare_gradients, numeric_gradient, GradCheckReport, DEFAULT_STEP};
use crate::encoder::{batch_loss, prepare_pair, EncoderDims, EncoderParams, LossKind, ModalityEncoder, TrainConfig};
use crate::kernels::{
    eucl_dist, soft_dtw, soft_dtw_value, wasserstein_with_tol, Direction, DistanceKind, Stage,
};
use crate::objective::{cav_loss, multitask_loss, scav_loss, zscore, Temperature, ZAxis, ZSCORE_EPS};
use crate::{Error, Result};

/// Threshold for single operations.
pub const COMPONENT_THRESHOLD: f64 = 1e-4;
/// Threshold for the composed encoder → distance → loss pipeline.
pub const PIPELINE_THRESHOLD: f64 = 1e-3;

/// Every registered target, in report order.
pub const TARGETS: &[&str] = &[
    "eucl_v2a",
    "eucl_a2v",
    "soft_dtw",
    "wasserstein",
    "zscore_rows",
    "zscore_cols",
    "scav_normalized",
    "scav_raw",
    "cav",
    "multitask",
    "encoder_video",
    "encoder_audio",
    "pipeline_scav_eucl",
    "pipeline_scav_sdtw",
    "pipeline_scav_wass",
    "pipeline_cav_eucl",
    "pipeline_cav_sdtw",
    "pipeline_cav_wass",
    "pipeline_multi_eucl",
    "pipeline_multi_sdtw",
    "pipeline_multi_wass",
];

type Scalar = Box<dyn Fn(&[f64]) -> Result<f64>>;

struct Instance {
    point: Vec<f64>,
    f: Scalar,
    grad: Vec<f64>,
    /// `None` checks every coordinate.
    coords: Option<Vec<usize>>,
}

fn unit_rms(rng: &mut ChaCha8Rng, t: usize, c: usize) -> Array2<f64> {
    // Uniform on [−√3, √3) has unit variance.
    let s = 3f64.sqrt();
    Array2::from_shape_simple_fn((t, c), || rng.random_range(-s..s))
}

fn weights(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<f64> {
    Array2::from_shape_simple_fn(shape, || rng.random_range(-1.0..1.0))
}

fn flat(parts: &[&Array2<f64>]) -> Vec<f64> {
    parts.iter().flat_map(|a| a.iter().copied()).collect()
}

/// Splits a flat vector back into matrices of the given shapes.
fn unflat(p: &[f64], shapes: &[(usize, usize)]) -> Vec<Array2<f64>> {
    let mut off = 0;
    shapes
        .iter()
        .map(|&(r, c)| {
            let a = Array2::from_shape_vec((r, c), p[off..off + r * c].to_vec()).expect("shape");
            off += r * c;
            a
        })
        .collect()
}

fn pair_instance(
    x: Array2<f64>,
    y: Array2<f64>,
    value: impl Fn(ArrayView2<f64>, ArrayView2<f64>) -> Result<f64> + 'static,
    grad: (Array2<f64>, Array2<f64>),
) -> Instance {
    let shapes = [x.dim(), y.dim()];
    Instance {
        point: flat(&[&x, &y]),
        f: Box::new(move |p| {
            let m = unflat(p, &shapes);
            value(m[0].view(), m[1].view())
        }),
        grad: flat(&[&grad.0, &grad.1]),
        coords: None,
    }
}

fn eucl_target(seed: u64, direction: Direction) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = unit_rms(&mut rng, 5, 3);
    let y = unit_rms(&mut rng, 4, 3);
    let (_, g) = eucl_dist(x.view(), y.view(), direction)?;
    Ok(pair_instance(
        x,
        y,
        move |a, b| Ok(eucl_dist(a, b, direction)?.0),
        (g.grad_x, g.grad_y),
    ))
}

fn soft_dtw_target(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = unit_rms(&mut rng, 5, 3);
    let y = unit_rms(&mut rng, 6, 3);
    let gamma = DistanceKind::DEFAULT_GAMMA;
    let (_, g) = soft_dtw(x.view(), y.view(), gamma)?;
    Ok(pair_instance(x, y, move |a, b| soft_dtw_value(a, b, gamma), (g.grad_x, g.grad_y)))
}

fn wasserstein_target(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = unit_rms(&mut rng, 4, 3);
    let y = unit_rms(&mut rng, 5, 3);
    // Tight convergence so the finite differences see the fixed point.
    let run = |a: ArrayView2<f64>, b: ArrayView2<f64>| {
        wasserstein_with_tol(a, b, 0.1, 20_000, 1.0, 1e-13)
    };
    let g = run(x.view(), y.view())?.grad;
    Ok(pair_instance(x, y, move |a, b| Ok(run(a, b)?.value), (g.grad_x, g.grad_y)))
}

fn zscore_target(seed: u64, axis: ZAxis) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = unit_rms(&mut rng, 4, 3);
    let w = weights(&mut rng, (4, 3));
    let z = zscore(m.view(), axis, ZSCORE_EPS)?;
    let grad = z.backward(w.view());
    Ok(Instance {
        point: flat(&[&m]),
        f: Box::new(move |p| {
            let m = Array2::from_shape_vec((4, 3), p.to_vec()).expect("shape");
            Ok((zscore(m.view(), axis, ZSCORE_EPS)?.output * &w).sum())
        }),
        grad: flat(&[&grad]),
        coords: None,
    })
}

/// Parameters: the `B × B` distance matrix, then `log λ`.
fn scav_target(seed: u64, normalize: bool) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = 4;
    let d = Array2::from_shape_simple_fn((b, b), || rng.random_range(0.0..2.0));
    let lambda = Temperature::new(0.7)?;
    let r = scav_loss(&d, lambda, normalize)?;
    let mut point = flat(&[&d]);
    point.push(lambda.log_value);
    let mut grad = flat(&[r.grad_distances.as_ref().expect("distance grad")]);
    grad.push(r.grad_log_lambda);
    Ok(Instance {
        point,
        f: Box::new(move |p| {
            let d = Array2::from_shape_vec((b, b), p[..b * b].to_vec()).expect("shape");
            Ok(scav_loss(&d, Temperature { log_value: p[b * b] }, normalize)?.loss)
        }),
        grad,
        coords: None,
    })
}

fn seq_batch(rng: &mut ChaCha8Rng, b: usize, t: usize, c: usize) -> Vec<Array2<f64>> {
    (0..b).map(|i| unit_rms(rng, t + i % 2, c)).collect()
}

/// Parameters: every video, every audio, then `log τ`.
fn cav_target(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hv = seq_batch(&mut rng, 3, 4, 3);
    let ha = seq_batch(&mut rng, 3, 3, 3);
    let tau = Temperature::new(0.3)?;
    let r = cav_loss(&hv, &ha, tau)?;
    let gs = r.grad_sequences.as_ref().expect("sequence grads");
    let shapes: Vec<(usize, usize)> = hv.iter().chain(&ha).map(|s| s.dim()).collect();
    let parts: Vec<&Array2<f64>> = hv.iter().chain(&ha).collect();
    let mut point = flat(&parts);
    point.push(tau.log_value);
    let gparts: Vec<&Array2<f64>> = gs.videos.iter().chain(&gs.audios).collect();
    let mut grad = flat(&gparts);
    grad.push(r.grad_log_tau);
    Ok(Instance {
        point,
        f: Box::new(move |p| {
            let m = unflat(p, &shapes);
            let (v, a) = m.split_at(3);
            Ok(cav_loss(v, a, Temperature { log_value: p[p.len() - 1] })?.loss)
        }),
        grad,
        coords: None,
    })
}

/// Parameters: distance matrix, sequences, `log λ`, `log τ`.
fn multitask_target(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = 3;
    let d = Array2::from_shape_simple_fn((b, b), || rng.random_range(0.0..2.0));
    let hv = seq_batch(&mut rng, b, 3, 2);
    let ha = seq_batch(&mut rng, b, 4, 2);
    let (lambda, tau, w) = (Temperature::new(0.9)?, Temperature::new(0.2)?, 0.35);
    let s = scav_loss(&d, lambda, true)?;
    let c = cav_loss(&hv, &ha, tau)?;
    let r = multitask_loss(&s, &c, w)?;
    let gs = r.grad_sequences.as_ref().expect("sequence grads");

    let mut shapes = vec![d.dim()];
    shapes.extend(hv.iter().chain(&ha).map(|s| s.dim()));
    let mut parts = vec![&d];
    parts.extend(hv.iter().chain(&ha));
    let mut point = flat(&parts);
    point.extend([lambda.log_value, tau.log_value]);
    let mut gparts = vec![r.grad_distances.as_ref().expect("distance grad")];
    gparts.extend(gs.videos.iter().chain(&gs.audios));
    let mut grad = flat(&gparts);
    grad.extend([r.grad_log_lambda, r.grad_log_tau]);
    Ok(Instance {
        point,
        f: Box::new(move |p| {
            let m = unflat(p, &shapes);
            let n = p.len();
            let s = scav_loss(&m[0], Temperature { log_value: p[n - 2] }, true)?;
            let c = cav_loss(&m[1..=b], &m[b + 1..], Temperature { log_value: p[n - 1] })?;
            Ok(multitask_loss(&s, &c, w)?.loss)
        }),
        grad,
        coords: None,
    })
}

/// Random parameters everywhere, including non-identity temporal taps and
/// non-zero biases.
fn random_params(rng: &mut ChaCha8Rng, dims: &EncoderDims) -> Result<EncoderParams> {
    let mut params = EncoderParams::init(rng, dims)?;
    for s in params.slices_mut() {
        for v in s.iter_mut() {
            *v = rng.random_range(-0.8..0.8);
        }
    }
    Ok(params)
}

fn set_flat(params: &mut EncoderParams, p: &[f64]) {
    let mut off = 0;
    for s in params.slices_mut() {
        let n = s.len();
        s.copy_from_slice(&p[off..off + n]);
        off += n;
    }
}

fn get_flat(params: &EncoderParams) -> Vec<f64> {
    params
        .named_tensors()
        .into_iter()
        .flat_map(|(_, _, d)| d.iter().copied())
        .collect()
}

/// `COORDS_PER_GROUP` random coordinates from every tensor (all of them if
/// the tensor is smaller), as offsets into the flat vector.
const COORDS_PER_GROUP: usize = 6;

fn sample_coords(rng: &mut ChaCha8Rng, params: &EncoderParams, limit_rows: usize) -> Vec<usize> {
    let mut coords = Vec::new();
    let mut off = 0;
    for (name, (rows, cols), d) in params.named_tensors() {
        // Positional rows past the longest input have zero gradient; sample
        // from the used rows.
        let usable = if name.ends_with(".pos") { rows.min(limit_rows) * cols } else { d.len() };
        let k = COORDS_PER_GROUP.min(usable);
        let mut picked: Vec<usize> = sample(rng, usable, k).into_iter().map(|i| off + i).collect();
        picked.sort_unstable();
        coords.extend(picked);
        off += d.len();
    }
    coords
}

fn encoder_target(seed: u64, video: bool) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = EncoderDims {
        video_in: 3,
        audio_in: 2,
        hidden: 4,
        latent: 3,
        max_len: 6,
    };
    let params = random_params(&mut rng, &dims)?;
    let enc: ModalityEncoder = if video { params.video } else { params.audio };
    let c_in = enc.input_dim();
    let x = unit_rms(&mut rng, 5, c_in);
    let w = weights(&mut rng, (5, 3));
    let (g, gx) = enc.encode_backward(x.view(), w.view())?;

    let mut point: Vec<f64> = enc.tensors().iter().flat_map(|(_, _, d)| d.iter().copied()).collect();
    let n_params = point.len();
    point.extend(x.iter().copied());
    let mut grad: Vec<f64> = g.tensors().iter().flat_map(|(_, _, d)| d.iter().copied()).collect();
    grad.extend(gx.iter().copied());
    Ok(Instance {
        point,
        f: Box::new(move |p| {
            let mut probe = enc.clone();
            let mut off = 0;
            for s in probe.tensors_mut() {
                let n = s.len();
                s.copy_from_slice(&p[off..off + n]);
                off += n;
            }
            let x = Array2::from_shape_vec((5, c_in), p[n_params..].to_vec()).expect("shape");
            Ok((probe.encode(x.view())? * &w).sum())
        }),
        grad,
        coords: None,
    })
}

/// Parameters: every encoder tensor, then `log λ`, `log τ`. Checked at a
/// sample of coordinates from every tensor plus both temperatures.
fn pipeline_target(seed: u64, loss: LossKind, distance: DistanceKind) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = EncoderDims {
        video_in: 3,
        audio_in: 2,
        hidden: 4,
        latent: 3,
        max_len: 5,
    };
    let mut params = random_params(&mut rng, &dims)?;
    for s in params.slices_mut() {
        for v in s.iter_mut() {
            *v *= 0.75;
        }
    }
    // With B = 2 every z-scored row is exactly ±1 and the normalized loss
    // would not depend on the encoder at all.
    let b = 3;
    let (videos, audios): (Vec<_>, Vec<_>) = (0..b)
        .map(|i| {
            let v = unit_rms(&mut rng, 4 + i % 2, 3);
            let a = unit_rms(&mut rng, 3 + i % 2, 2);
            prepare_pair(&distance, v, a)
        })
        .unzip();
    let cfg = TrainConfig {
        loss,
        distance,
        batch_size: b,
        multitask_weight: 0.4,
        workers: Some(1),
        ..TrainConfig::default()
    };
    let (lambda, tau) = (Temperature::new(0.8)?, Temperature::new(0.25)?);
    let out = batch_loss(&params, lambda, tau, &videos, &audios, &cfg)?;

    let mut point = get_flat(&params);
    let n = point.len();
    point.extend([lambda.log_value, tau.log_value]);
    let mut grad = get_flat(&out.params);
    grad.extend([out.log_lambda, out.log_tau]);
    let mut coords = sample_coords(&mut rng, &params, 5);
    coords.extend([n, n + 1]);
    Ok(Instance {
        point,
        f: Box::new(move |p| {
            let mut probe = params.clone();
            set_flat(&mut probe, &p[..n]);
            let lambda = Temperature { log_value: p[n] };
            let tau = Temperature { log_value: p[n + 1] };
            Ok(batch_loss(&probe, lambda, tau, &videos, &audios, &cfg)?.loss)
        }),
        grad,
        coords: Some(coords),
    })
}

fn pipeline_distance(name: &str) -> DistanceKind {
    match name {
        "eucl" => DistanceKind::eucl(Direction::V2A, Stage::Pre),
        "sdtw" => DistanceKind::soft_dtw_default(),
        // Converged far past the default tolerance so the finite
        // differences see the fixed point the gradient is exact at.
        _ => DistanceKind::Wasserstein {
            epsilon: DistanceKind::DEFAULT_EPSILON,
            iters: 50_000,
            pos_weight: 1.0,
            tol: 1e-13,
        },
    }
}

fn build(name: &str, seed: u64) -> Result<(Instance, f64)> {
    let component = |i: Result<Instance>| i.map(|i| (i, COMPONENT_THRESHOLD));
    match name {
        "eucl_v2a" => component(eucl_target(seed, Direction::V2A)),
        "eucl_a2v" => component(eucl_target(seed, Direction::A2V)),
        "soft_dtw" => component(soft_dtw_target(seed)),
        "wasserstein" => component(wasserstein_target(seed)),
        "zscore_rows" => component(zscore_target(seed, ZAxis::Rows)),
        "zscore_cols" => component(zscore_target(seed, ZAxis::Cols)),
        "scav_normalized" => component(scav_target(seed, true)),
        "scav_raw" => component(scav_target(seed, false)),
        "cav" => component(cav_target(seed)),
        "multitask" => component(multitask_target(seed)),
        "encoder_video" => component(encoder_target(seed, true)),
        "encoder_audio" => component(encoder_target(seed, false)),
        _ => {
            let mut parts = name.strip_prefix("pipeline_").map(|r| r.split('_'));
            let (loss, dist) = match parts.as_mut().map(|p| (p.next(), p.next(), p.next())) {
                Some((Some(l), Some(d), None)) => (l, d),
                _ => return Err(unknown(name)),
            };
            let loss = match loss {
                "scav" => LossKind::Scav,
                "cav" => LossKind::Cav,
                "multi" => LossKind::Multi,
                _ => return Err(unknown(name)),
            };
            if !["eucl", "sdtw", "wass"].contains(&dist) {
                return Err(unknown(name));
            }
            pipeline_target(seed, loss, pipeline_distance(dist)).map(|i| (i, PIPELINE_THRESHOLD))
        }
    }
}

fn unknown(name: &str) -> Error {
    Error::InvalidArgument(format!("unknown gradcheck target {name:?}; known: {}", TARGETS.join(", ")))
}

/// Checks one target. `threshold` overrides the target's default.
pub fn run_target(name: &str, seed: u64, threshold: Option<f64>) -> Result<GradCheckReport> {
    let (inst, default) = build(name, seed)?;
    let threshold = threshold.unwrap_or(default);
    let f = &inst.f;
    let numeric = numeric_gradient(
        |p| f(p).unwrap_or(f64::NAN),
        &inst.point,
        DEFAULT_STEP,
        inst.coords.as_deref(),
    )?;
    let analytic: Vec<f64> = match &inst.coords {
        Some(c) => c.iter().map(|&i| inst.grad[i]).collect(),
        None => inst.grad.clone(),
    };
    Ok(compare_gradients(name, &analytic, &numeric, threshold))
}

/// Every target in [`TARGETS`] order.
pub fn run_all(seed: u64, threshold: Option<f64>) -> Result<Vec<GradCheckReport>> {
    TARGETS.iter().map(|t| run_target(t, seed, threshold)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_targets_are_rejected() {
        for name in ["nope", "pipeline_scav", "pipeline_x_eucl", "pipeline_scav_dtw", "pipeline_scav_eucl_x"] {
            assert!(matches!(run_target(name, 0, None), Err(Error::InvalidArgument(_))), "{name}");
        }
    }

    #[test]
    fn a_perturbed_gradient_fails() {
        let (inst, _) = build("eucl_v2a", 1).unwrap();
        let mut wrong = inst.grad.clone();
        wrong[0] += 1e-2;
        let numeric = numeric_gradient(|p| (inst.f)(p).unwrap(), &inst.point, DEFAULT_STEP, None).unwrap();
        assert!(!compare_gradients("x", &wrong, &numeric, 1e-4).passed);
    }
}
