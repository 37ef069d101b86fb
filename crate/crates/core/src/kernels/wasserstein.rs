use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2};

use super::{check_dims, cost_matrix, cost_matrix_backward, KernelGrad};
use crate::{Error, Result};

/// Sinkhorn stops once the L1 row-marginal violation drops below this.
pub const DEFAULT_MARGINAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WassersteinOutput {
    /// Transport cost ⟨P, C⟩ of the entropic plan, without the entropy term.
    pub value: f64,
    pub grad: KernelGrad,
    pub plan: Array2<f64>,
    /// L1 violation of the row marginals when the iterations stopped.
    pub marginal_violation: f64,
    pub iterations: usize,
}

/// Frame cost plus `pos_weight · (k/(T_x−1) − l/(T_y−1))²`. The positional
/// term is dropped when either sequence has a single frame.
fn transport_cost(x: ArrayView2<f64>, y: ArrayView2<f64>, pos_weight: f64) -> Array2<f64> {
    let mut cost = cost_matrix(x, y);
    let (tx, ty) = cost.dim();
    if pos_weight > 0.0 && tx > 1 && ty > 1 {
        for ((k, l), v) in cost.indexed_iter_mut() {
            let d = k as f64 / (tx - 1) as f64 - l as f64 / (ty - 1) as f64;
            *v += pos_weight * d * d;
        }
    }
    cost
}

fn logsumexp(it: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = it.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + it.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// Positional entropic Wasserstein distance with uniform marginals.
pub fn wasserstein(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    epsilon: f64,
    iters: usize,
    pos_weight: f64,
) -> Result<WassersteinOutput> {
    wasserstein_with_tol(x, y, epsilon, iters, pos_weight, DEFAULT_MARGINAL_TOL)
}

/// [`wasserstein`] with an explicit stopping tolerance on the marginals.
///
/// Runs log-domain Sinkhorn for at most `iters` sweeps. The gradient is the
/// exact derivative of ⟨P, C⟩ at the Sinkhorn fixed point: the plan's
/// dependence on the cost is obtained by implicit differentiation of the
/// marginal constraints, which costs one `(T_x+T_y−1)`-sized linear solve.
pub fn wasserstein_with_tol(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    epsilon: f64,
    iters: usize,
    pos_weight: f64,
    tol: f64,
) -> Result<WassersteinOutput> {
    check_dims(x, y)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if iters == 0 {
        return Err(Error::InvalidArgument("iters must be >= 1".into()));
    }
    let cost = transport_cost(x, y, pos_weight);
    let (n, m) = cost.dim();
    let log_a = -(n as f64).ln();
    let log_b = -(m as f64).ln();
    let a = 1.0 / n as f64;

    let mut f = Array1::<f64>::zeros(n);
    let mut g = Array1::<f64>::zeros(m);
    let mut violation = f64::INFINITY;
    let mut done = 0;
    for it in 1..=iters {
        for k in 0..n {
            let row = cost.row(k);
            f[k] = epsilon * (log_a - logsumexp((0..m).map(|l| (g[l] - row[l]) / epsilon)));
        }
        for l in 0..m {
            let col = cost.column(l);
            g[l] = epsilon * (log_b - logsumexp((0..n).map(|k| (f[k] - col[k]) / epsilon)));
        }
        violation = (0..n)
            .map(|k| {
                let mass: f64 = (0..m)
                    .map(|l| ((f[k] + g[l] - cost[[k, l]]) / epsilon).exp())
                    .sum();
                (mass - a).abs()
            })
            .sum();
        done = it;
        if violation < tol {
            break;
        }
    }

    let plan = Array2::from_shape_fn((n, m), |(k, l)| {
        ((f[k] + g[l] - cost[[k, l]]) / epsilon).exp()
    });
    let value = (&plan * &cost).sum();
    let dcost = plan_sensitivity(&plan, &cost, epsilon);
    // The positional term does not depend on the frames.
    let grad = cost_matrix_backward(x, y, &dcost);
    Ok(WassersteinOutput {
        value,
        grad,
        plan,
        marginal_violation: violation,
        iterations: done,
    })
}

/// ∂⟨P, C⟩/∂C where P is the entropic plan for C.
///
/// With P = exp((f ⊕ g − C)/ε) and the marginals held fixed, the adjoint
/// system `M z = w` with `M = [[diag(P1), P], [Pᵀ, diag(Pᵀ1)]]` and
/// `w = [rowsum(P∘C); colsum(P∘C)] / ε` gives
/// `∂/∂C_kl = P_kl (1 − C_kl/ε + z_k + z_{n+l})`. `M` has a one-dimensional
/// null space (shifting f up and g down), removed by pinning the last `g`.
fn plan_sensitivity(plan: &Array2<f64>, cost: &Array2<f64>, epsilon: f64) -> Array2<f64> {
    let (n, m) = plan.dim();
    let size = n + m - 1;
    let weighted = plan * cost;
    let mut mat = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for k in 0..n {
        mat[(k, k)] = plan.row(k).sum();
        rhs[k] = weighted.row(k).sum() / epsilon;
        for l in 0..m - 1 {
            mat[(k, n + l)] = plan[[k, l]];
            mat[(n + l, k)] = plan[[k, l]];
        }
    }
    for l in 0..m - 1 {
        mat[(n + l, n + l)] = plan.column(l).sum();
        rhs[n + l] = weighted.column(l).sum() / epsilon;
    }
    let z = match mat.lu().solve(&rhs) {
        Some(z) if z.iter().all(|v| v.is_finite()) => z,
        // Degenerate plan: fall back to the first-order (fixed-plan) term.
        _ => return plan.clone(),
    };
    Array2::from_shape_fn((n, m), |(k, l)| {
        let zg = if l + 1 < m { z[n + l] } else { 0.0 };
        plan[[k, l]] * (1.0 - cost[[k, l]] / epsilon + z[k] + zg)
    })
}

#[cfg(test)]
mod tests {
    use ndarray::{array, s, Axis};

    use super::*;
    use crate::kernels::test_util::*;

    #[test]
    fn single_frames_cost_exactly() {
        let x = array![[1.0, 0.0]];
        let y = array![[0.0, 2.0]];
        let out = wasserstein(x.view(), y.view(), 0.1, 10, 1.0).unwrap();
        assert!((out.value - 2.5).abs() < 1e-12);
    }

    #[test]
    fn self_distance_vanishes_with_small_epsilon() {
        let x = random_seq(&mut rng(21), 4, 3);
        let out = wasserstein(x.view(), x.view(), 1e-3, 5000, 0.0).unwrap();
        assert!(out.value <= 1e-3, "{}", out.value);
    }

    #[test]
    fn plan_has_uniform_marginals() {
        let mut r = rng(22);
        let x = random_seq(&mut r, 5, 2);
        let y = random_seq(&mut r, 3, 2);
        let out = wasserstein(x.view(), y.view(), 0.1, 1000, 1.0).unwrap();
        assert!(out.marginal_violation < DEFAULT_MARGINAL_TOL);
        for v in out.plan.sum_axis(Axis(0)) {
            assert!((v - 1.0 / 3.0).abs() < 1e-9);
        }
        for v in out.plan.sum_axis(Axis(1)) {
            assert!((v - 0.2).abs() < 1e-6);
        }
    }

    #[test]
    fn time_reversal_costs_more() {
        let mut r = rng(23);
        for _ in 0..20 {
            let x = random_seq(&mut r, 6, 3);
            let rev = x.slice(s![..;-1, ..]).to_owned();
            let same = wasserstein(x.view(), x.view(), 0.1, 100, 1.0).unwrap().value;
            let flipped = wasserstein(x.view(), rev.view(), 0.1, 100, 1.0).unwrap().value;
            assert!(flipped > same + 1e-9, "{flipped} vs {same}");
        }
    }

    #[test]
    fn non_convergence_is_reported_not_raised() {
        let mut r = rng(24);
        let x = random_seq(&mut r, 6, 3);
        let y = random_seq(&mut r, 6, 3);
        let out = wasserstein(x.view(), y.view(), 1e-3, 1, 1.0).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.value.is_finite());
        assert!(out.marginal_violation.is_finite());
    }

    #[test]
    fn rejects_bad_parameters() {
        let x = array![[0.0]];
        assert!(wasserstein(x.view(), x.view(), 0.0, 10, 1.0).is_err());
        assert!(wasserstein(x.view(), x.view(), 0.1, 0, 1.0).is_err());
    }
}
