use ndarray::{Array2, ArrayView2};

use super::{check_dims, cost_matrix, cost_matrix_backward, KernelGrad};
use crate::{Error, Result};

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "gamma must be positive, got {gamma}"
        )))
    }
}

/// −γ·ln(e^{−a/γ} + e^{−b/γ} + e^{−c/γ}), shifted by the minimum.
#[inline]
fn softmin3(a: f64, b: f64, c: f64, gamma: f64) -> f64 {
    let m = a.min(b).min(c);
    if m == f64::INFINITY {
        return m;
    }
    let s = (-(a - m) / gamma).exp() + (-(b - m) / gamma).exp() + (-(c - m) / gamma).exp();
    m - gamma * s.ln()
}

/// Forward soft-DTW table with an infinite border, `(T_x+2) × (T_y+2)`.
/// The extra trailing row/column is scratch space for the backward pass.
fn soft_table(cost: &Array2<f64>, gamma: f64) -> Array2<f64> {
    let (tx, ty) = cost.dim();
    let mut r = Array2::from_elem((tx + 2, ty + 2), f64::INFINITY);
    r[[0, 0]] = 0.0;
    for i in 1..=tx {
        for j in 1..=ty {
            r[[i, j]] = cost[[i - 1, j - 1]]
                + softmin3(r[[i - 1, j - 1]], r[[i - 1, j]], r[[i, j - 1]], gamma);
        }
    }
    r
}

/// Soft-DTW value only, normalized by `T_x + T_y`.
pub fn soft_dtw_value(x: ArrayView2<f64>, y: ArrayView2<f64>, gamma: f64) -> Result<f64> {
    check_dims(x, y)?;
    check_gamma(gamma)?;
    let cost = cost_matrix(x, y);
    let (tx, ty) = cost.dim();
    // Two rolling rows are enough without a backward pass.
    let mut prev = vec![f64::INFINITY; ty + 1];
    let mut cur = vec![f64::INFINITY; ty + 1];
    prev[0] = 0.0;
    for i in 1..=tx {
        cur[0] = f64::INFINITY;
        for j in 1..=ty {
            cur[j] = cost[[i - 1, j - 1]] + softmin3(prev[j - 1], prev[j], cur[j - 1], gamma);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[ty] / (tx + ty) as f64)
}

/// Soft-DTW with soft-min temperature `gamma`, normalized by `T_x + T_y`,
/// plus its gradient from the backward recursion over soft alignments.
pub fn soft_dtw(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    gamma: f64,
) -> Result<(f64, KernelGrad)> {
    check_dims(x, y)?;
    check_gamma(gamma)?;
    let cost = cost_matrix(x, y);
    let (tx, ty) = cost.dim();
    let norm = (tx + ty) as f64;
    let mut r = soft_table(&cost, gamma);
    let value = r[[tx, ty]] / norm;

    // Expected alignment matrix E(i,j) = ∂r(T_x,T_y)/∂cost(i,j).
    let mut padded = Array2::zeros((tx + 2, ty + 2));
    padded
        .slice_mut(ndarray::s![1..=tx, 1..=ty])
        .assign(&cost);
    for i in 1..=tx {
        r[[i, ty + 1]] = f64::NEG_INFINITY;
    }
    for j in 1..=ty {
        r[[tx + 1, j]] = f64::NEG_INFINITY;
    }
    r[[tx + 1, ty + 1]] = r[[tx, ty]];
    let mut e = Array2::<f64>::zeros((tx + 2, ty + 2));
    e[[tx + 1, ty + 1]] = 1.0;
    for j in (1..=ty).rev() {
        for i in (1..=tx).rev() {
            let rij = r[[i, j]];
            let a = ((r[[i + 1, j]] - rij - padded[[i + 1, j]]) / gamma).exp();
            let b = ((r[[i, j + 1]] - rij - padded[[i, j + 1]]) / gamma).exp();
            let c = ((r[[i + 1, j + 1]] - rij - padded[[i + 1, j + 1]]) / gamma).exp();
            e[[i, j]] = e[[i + 1, j]] * a + e[[i, j + 1]] * b + e[[i + 1, j + 1]] * c;
        }
    }
    let dcost = e.slice(ndarray::s![1..=tx, 1..=ty]).mapv(|w| w / norm);
    Ok((value, cost_matrix_backward(x, y, &dcost)))
}

/// Classic DTW (min-plus recursion), same cost and normalization as
/// [`soft_dtw`].
pub fn hard_dtw(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<f64> {
    check_dims(x, y)?;
    let cost = cost_matrix(x, y);
    let (tx, ty) = cost.dim();
    let mut prev = vec![f64::INFINITY; ty + 1];
    let mut cur = vec![f64::INFINITY; ty + 1];
    prev[0] = 0.0;
    for i in 1..=tx {
        cur[0] = f64::INFINITY;
        for j in 1..=ty {
            cur[j] = cost[[i - 1, j - 1]] + prev[j - 1].min(prev[j]).min(cur[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[ty] / (tx + ty) as f64)
}
