use ndarray::ArrayView2;

use crate::{Error, Result};

/// Largest number of alignment paths [`brute_dtw`] will enumerate.
pub const MAX_PATHS: u128 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtwMode {
    Hard,
    Soft { gamma: f64 },
}

fn sq_cost(a: ArrayView2<f64>, i: usize, b: ArrayView2<f64>, j: usize) -> f64 {
    let c = a.ncols();
    let mut total = 0.0;
    for ch in 0..c {
        total += (a[[i, ch]] - b[[j, ch]]).powi(2);
    }
    total / c as f64
}

/// Number of monotone paths from (0,0) to (m,n) with unit right, down and
/// diagonal steps.
fn delannoy(m: usize, n: usize) -> u128 {
    let mut table = vec![vec![1u128; n + 1]; m + 1];
    for i in 1..=m {
        for j in 1..=n {
            table[i][j] = table[i - 1][j]
                .saturating_add(table[i][j - 1])
                .saturating_add(table[i - 1][j - 1]);
        }
    }
    table[m][n]
}

fn collect_paths(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    i: usize,
    j: usize,
    acc: f64,
    out: &mut Vec<f64>,
) {
    let acc = acc + sq_cost(x, i, y, j);
    let (last_i, last_j) = (x.nrows() - 1, y.nrows() - 1);
    if i == last_i && j == last_j {
        out.push(acc);
        return;
    }
    if i < last_i {
        collect_paths(x, y, i + 1, j, acc, out);
    }
    if j < last_j {
        collect_paths(x, y, i, j + 1, acc, out);
    }
    if i < last_i && j < last_j {
        collect_paths(x, y, i + 1, j + 1, acc, out);
    }
}

/// Enumerates every alignment path and returns the (soft) minimum of their
/// costs divided by `T_x + T_y`. Also returns how many paths were visited.
pub fn brute_dtw(x: ArrayView2<f64>, y: ArrayView2<f64>, mode: DtwMode) -> Result<(f64, usize)> {
    if x.nrows() == 0 || y.nrows() == 0 || x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch("brute_dtw needs non-empty sequences of equal width".into()));
    }
    let count = delannoy(x.nrows() - 1, y.nrows() - 1);
    if count > MAX_PATHS {
        return Err(Error::TooLarge(format!("{count} alignment paths")));
    }
    let mut costs = Vec::with_capacity(count as usize);
    collect_paths(x, y, 0, 0, 0.0, &mut costs);
    let norm = (x.nrows() + y.nrows()) as f64;
    let value = match mode {
        DtwMode::Hard => costs.iter().cloned().fold(f64::INFINITY, f64::min),
        DtwMode::Soft { gamma } => {
            let lo = costs.iter().cloned().fold(f64::INFINITY, f64::min);
            let s: f64 = costs.iter().map(|c| (-(c - lo) / gamma).exp()).sum();
            lo - gamma * s.ln()
        }
    };
    Ok((value / norm, costs.len()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

/// Exact transport cost for equal lengths by searching all permutations
/// (optimal for uniform square marginals). Cost definition mirrors the
/// positional Wasserstein kernel.
pub fn brute_wasserstein(x: ArrayView2<f64>, y: ArrayView2<f64>, pos_weight: f64) -> Result<f64> {
    let t = x.nrows();
    if t != y.nrows() {
        return Err(Error::ShapeMismatch(format!(
            "brute_wasserstein needs equal lengths, got {} and {}",
            t,
            y.nrows()
        )));
    }
    if t == 0 || x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch("empty sequence or width mismatch".into()));
    }
    if t > 8 {
        return Err(Error::TooLarge(format!("{t}! permutations")));
    }
    let position = |k: usize| if t > 1 { k as f64 / (t - 1) as f64 } else { 0.0 };
    let mut best = f64::INFINITY;
    for perm in permutations(t) {
        let total: f64 = perm
            .iter()
            .enumerate()
            .map(|(k, &l)| sq_cost(x, k, y, l) + pos_weight * (position(k) - position(l)).powi(2))
            .sum();
        best = best.min(total / t as f64);
    }
    Ok(best)
}
