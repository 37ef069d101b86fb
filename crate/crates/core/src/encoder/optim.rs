use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Denominator guard of the Adam update.
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.95,
            beta2: 0.98,
            weight_decay: 0.0,
        }
    }
}

/// First and second moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

/// One AdamW update. `step` is 1-based and drives bias correction; decay is
/// decoupled (`p ← p·(1 − lr·wd)` before the moment step).
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, step: usize, lr: f64, hyper: &AdamHyper) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    assert!(step >= 1, "adam step index is 1-based");
    let c1 = 1.0 - hyper.beta1.powi(step as i32);
    let c2 = 1.0 - hyper.beta2.powi(step as i32);
    let shrink = 1.0 - lr * hyper.weight_decay;
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = hyper.beta1 * *m + (1.0 - hyper.beta1) * g;
        *v = hyper.beta2 * *v + (1.0 - hyper.beta2) * g * g;
        *p *= shrink;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
    }
}

/// Linear warm-up from 0 to `base_lr` over `warmup` steps, then a half
/// cosine down to 0 at `total`.
pub fn cosine_lr(step: usize, base_lr: f64, warmup: usize, total: usize) -> f64 {
    let step = step.min(total);
    if step < warmup {
        return base_lr * step as f64 / warmup as f64;
    }
    if total == warmup {
        return base_lr;
    }
    let progress = (step - warmup) as f64 / (total - warmup) as f64;
    base_lr * 0.5 * (1.0 + (PI * progress).cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grads_without_decay_leave_params() {
        let mut p = vec![0.3, -1.2, 4.0];
        let mut s = AdamState::zeros(3);
        adam_step(&mut p, &[0.0; 3], &mut s, 1, 0.1, &AdamHyper::default());
        assert_eq!(p, vec![0.3, -1.2, 4.0]);
    }

    #[test]
    fn first_step_matches_hand_formula() {
        // m̂ = g and v̂ = g² after one step, so the update is lr·g/(|g| + eps).
        let g = [0.5, -2.0, 1e-3];
        let mut p = vec![1.0; 3];
        let mut s = AdamState::zeros(3);
        adam_step(&mut p, &g, &mut s, 1, 0.01, &AdamHyper::default());
        for (pi, gi) in p.iter().zip(g) {
            let expected = 1.0 - 0.01 * gi / (gi.abs() + ADAM_EPS);
            assert!((pi - expected).abs() < 1e-15, "{pi} vs {expected}");
        }
    }

    #[test]
    fn second_step_matches_hand_formula() {
        let hyper = AdamHyper::default();
        let (g1, g2, lr) = (0.4, -0.1, 0.02);
        let mut p = vec![0.0];
        let mut s = AdamState::zeros(1);
        adam_step(&mut p, &[g1], &mut s, 1, lr, &hyper);
        adam_step(&mut p, &[g2], &mut s, 2, lr, &hyper);
        let m = 0.95 * 0.05 * g1 + 0.05 * g2;
        let v = 0.98 * 0.02 * g1 * g1 + 0.02 * g2 * g2;
        let mhat = m / (1.0 - 0.95f64.powi(2));
        let vhat = v / (1.0 - 0.98f64.powi(2));
        let expected = -lr * g1 / (g1.abs() + ADAM_EPS) - lr * mhat / (vhat.sqrt() + ADAM_EPS);
        assert!((p[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn decay_alone_is_a_multiplicative_shrink() {
        let hyper = AdamHyper {
            weight_decay: 0.1,
            ..AdamHyper::default()
        };
        let mut p = vec![2.0, -3.0];
        let mut s = AdamState::zeros(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 1, 0.5, &hyper);
        assert_eq!(p, vec![2.0 * 0.95, -3.0 * 0.95]);
    }

    #[test]
    fn schedule_endpoints() {
        assert_eq!(cosine_lr(0, 7e-4, 10, 100), 0.0);
        assert_eq!(cosine_lr(5, 7e-4, 10, 100), 3.5e-4);
        assert_eq!(cosine_lr(10, 7e-4, 10, 100), 7e-4);
        assert!(cosine_lr(100, 7e-4, 10, 100).abs() < 1e-12);
        assert!((cosine_lr(55, 7e-4, 10, 100) - 3.5e-4).abs() < 1e-15);
        assert_eq!(cosine_lr(0, 1.0, 0, 4), 1.0);
    }

    #[test]
    fn schedule_decreases_after_warmup() {
        let lrs: Vec<f64> = (10..=100).map(|s| cosine_lr(s, 1.0, 10, 100)).collect();
        assert!(lrs.windows(2).all(|w| w[1] <= w[0]));
    }
}
