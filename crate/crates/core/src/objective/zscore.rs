use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::{Error, Result};

pub const ZSCORE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZAxis {
    /// Normalize each row (statistics over columns).
    Rows,
    /// Normalize each column.
    Cols,
}

/// A z-scored matrix plus what its backward pass needs.
#[derive(Debug, Clone)]
pub struct ZScore {
    pub output: Array2<f64>,
    axis: ZAxis,
    centered: Array2<f64>,
    std: Array1<f64>,
    eps: f64,
}

/// Subtracts the population mean and divides by the population standard
/// deviation along each row or column. The divisor is floored at `eps`, so a
/// constant lane maps to zeros while any other lane is exactly
/// shift- and scale-invariant.
pub fn zscore(m: ArrayView2<f64>, axis: ZAxis, eps: f64) -> Result<ZScore> {
    let lane_axis = match axis {
        ZAxis::Rows => Axis(1),
        ZAxis::Cols => Axis(0),
    };
    let n = m.len_of(lane_axis);
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "z-score needs at least 2 entries per lane, got {n}"
        )));
    }
    let mean = m.mean_axis(lane_axis).expect("non-empty");
    let bcast = |v: &Array1<f64>| match axis {
        ZAxis::Rows => v.clone().insert_axis(Axis(1)),
        ZAxis::Cols => v.clone().insert_axis(Axis(0)),
    };
    let centered = &m - &bcast(&mean);
    let std = centered
        .mapv(|v| v * v)
        .mean_axis(lane_axis)
        .expect("non-empty")
        .mapv(f64::sqrt);
    let output = &centered / &bcast(&std.mapv(|s| s.max(eps)));
    Ok(ZScore {
        output,
        axis,
        centered,
        std,
        eps,
    })
}

impl ZScore {
    /// Gradient with respect to the input given ∂f/∂output. Flows through
    /// both the mean and the standard deviation; in a lane whose spread is
    /// below the floor only the mean contributes.
    pub fn backward(&self, upstream: ArrayView2<f64>) -> Array2<f64> {
        let (upstream, centered) = match self.axis {
            ZAxis::Rows => (upstream, self.centered.view()),
            ZAxis::Cols => (upstream.reversed_axes(), self.centered.t()),
        };
        let n = centered.ncols() as f64;
        let mut grad = Array2::zeros(centered.raw_dim());
        for (lane, mut out) in grad.outer_iter_mut().enumerate() {
            let g = upstream.row(lane);
            let xc = centered.row(lane);
            let sigma = self.std[lane];
            let floored = sigma <= self.eps;
            let s = if floored { self.eps } else { sigma };
            let g_mean = g.mean().expect("non-empty");
            let g_dot_xc: f64 = g.iter().zip(xc).map(|(a, b)| a * b).sum();
            for j in 0..out.len() {
                let mut v = (g[j] - g_mean) / s;
                if !floored {
                    v -= g_dot_xc * xc[j] / (s * s * n * sigma);
                }
                out[j] = v;
            }
        }
        match self.axis {
            ZAxis::Rows => grad,
            ZAxis::Cols => grad.reversed_axes().as_standard_layout().into_owned(),
        }
    }
}
