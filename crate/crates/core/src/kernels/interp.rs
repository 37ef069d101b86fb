use ndarray::{Array2, ArrayView2};

/// One output row of an endpoint-aligned resampling: `lo + frac·(hi − lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpTap {
    pub lo: usize,
    pub hi: usize,
    pub frac: f64,
}

/// Sampling grid for resampling `src_len` rows onto `target_len` rows.
///
/// Row `k` samples source position `k·(T−1)/(L−1)`; the first and last rows
/// map exactly onto the first and last source rows.
pub fn interp_grid(src_len: usize, target_len: usize) -> Vec<InterpTap> {
    assert!(src_len >= 1 && target_len >= 1, "lengths must be positive");
    if target_len == 1 || src_len == 1 {
        return vec![InterpTap { lo: 0, hi: 0, frac: 0.0 }; target_len];
    }
    let last = src_len - 1;
    let span = (target_len - 1) as f64;
    (0..target_len)
        .map(|k| {
            if src_len == target_len {
                return InterpTap { lo: k, hi: k, frac: 0.0 };
            }
            let pos = (k * last) as f64 / span;
            let lo = pos.floor() as usize;
            if lo >= last {
                InterpTap { lo: last, hi: last, frac: 0.0 }
            } else {
                InterpTap { lo, hi: lo + 1, frac: pos - lo as f64 }
            }
        })
        .collect()
}

/// Endpoint-aligned linear interpolation of a `T × c` sequence to `L` rows.
/// Returns the input unchanged when `L == T`.
pub fn linear_interp(seq: ArrayView2<f64>, target_len: usize) -> Array2<f64> {
    if seq.nrows() == target_len {
        return seq.to_owned();
    }
    let grid = interp_grid(seq.nrows(), target_len);
    let mut out = Array2::zeros((target_len, seq.ncols()));
    for (k, tap) in grid.iter().enumerate() {
        for ch in 0..seq.ncols() {
            let a = seq[[tap.lo, ch]];
            out[[k, ch]] = if tap.frac == 0.0 {
                a
            } else {
                a + tap.frac * (seq[[tap.hi, ch]] - a)
            };
        }
    }
    out
}

/// Pulls a gradient on the resampled rows back onto the `src_len` source rows.
pub fn linear_interp_backward(upstream: ArrayView2<f64>, src_len: usize) -> Array2<f64> {
    let grid = interp_grid(src_len, upstream.nrows());
    let mut grad = Array2::zeros((src_len, upstream.ncols()));
    for (k, tap) in grid.iter().enumerate() {
        for ch in 0..upstream.ncols() {
            let g = upstream[[k, ch]];
            grad[[tap.lo, ch]] += (1.0 - tap.frac) * g;
            if tap.frac != 0.0 {
                grad[[tap.hi, ch]] += tap.frac * g;
            }
        }
    }
    grad
}
