//! Sequential distance kernels.
//!
//! Every kernel maps two time-major sequences `x` (`T_x × c`) and `y`
//! (`T_y × c`) to a scalar and, where differentiable, returns the gradient of
//! that scalar with respect to both inputs. Frame costs are squared Euclidean
//! distances divided by `c` in all kernels. By convention `x` plays the video
//! role and `y` the audio role.

mod dtw;
mod eucl;
mod interp;
mod pairwise;
mod wasserstein;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use dtw::{hard_dtw, soft_dtw, soft_dtw_value};
pub use eucl::{eucl_dist, eucl_value};
pub use interp::{interp_grid, linear_interp, linear_interp_backward, InterpTap};
pub use pairwise::{pairwise_matrix, pairwise_with_grads, DistanceMatrix};
pub use wasserstein::{
    wasserstein, wasserstein_with_tol, WassersteinOutput, DEFAULT_MARGINAL_TOL,
};

/// Which sequence gets resampled to the other's length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Video (`x`) is resampled to the audio length.
    V2A,
    /// Audio (`y`) is resampled to the video length.
    A2V,
}

/// Where interpolation happens: on raw features before encoding, or on
/// latents inside the distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistanceKind {
    EuclInterp {
        direction: Direction,
        stage: Stage,
    },
    SoftDtw {
        gamma: f64,
    },
    /// Hard DTW. Evaluation only: it has no gradient.
    HardDtw,
    Wasserstein {
        epsilon: f64,
        iters: usize,
        pos_weight: f64,
        /// Sinkhorn stops once the L1 row-marginal violation is below this.
        #[serde(default = "default_tol")]
        tol: f64,
    },
}

fn default_tol() -> f64 {
    DEFAULT_MARGINAL_TOL
}

impl DistanceKind {
    pub const DEFAULT_GAMMA: f64 = 0.1;
    pub const DEFAULT_EPSILON: f64 = 0.1;
    pub const DEFAULT_ITERS: usize = 100;
    pub const DEFAULT_POS_WEIGHT: f64 = 1.0;

    pub fn eucl(direction: Direction, stage: Stage) -> Self {
        DistanceKind::EuclInterp { direction, stage }
    }

    pub fn soft_dtw_default() -> Self {
        DistanceKind::SoftDtw {
            gamma: Self::DEFAULT_GAMMA,
        }
    }

    pub fn wasserstein_default() -> Self {
        DistanceKind::Wasserstein {
            epsilon: Self::DEFAULT_EPSILON,
            iters: Self::DEFAULT_ITERS,
            pos_weight: Self::DEFAULT_POS_WEIGHT,
            tol: DEFAULT_MARGINAL_TOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DistanceKind::SoftDtw { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::InvalidArgument(format!("gamma must be positive, got {gamma}")),
            ),
            DistanceKind::Wasserstein {
                epsilon,
                iters,
                pos_weight,
                tol,
            } => {
                if !(tol > 0.0 && tol.is_finite()) {
                    return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
                }
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "epsilon must be positive, got {epsilon}"
                    )));
                }
                if iters == 0 {
                    return Err(Error::InvalidArgument("iters must be >= 1".into()));
                }
                if !(pos_weight >= 0.0 && pos_weight.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "pos_weight must be non-negative, got {pos_weight}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, DistanceKind::HardDtw)
    }

    /// Short name used in reports and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            DistanceKind::EuclInterp { .. } => "eucl",
            DistanceKind::SoftDtw { .. } => "sdtw",
            DistanceKind::HardDtw => "dtw",
            DistanceKind::Wasserstein { .. } => "wass",
        }
    }
}

/// Partial derivatives of a scalar distance with respect to both inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrad {
    pub grad_x: Array2<f64>,
    pub grad_y: Array2<f64>,
}

/// Distance value only. Used by retrieval and the forward pass of training.
pub fn distance(x: ArrayView2<f64>, y: ArrayView2<f64>, kind: &DistanceKind) -> Result<f64> {
    check_dims(x, y)?;
    Ok(match *kind {
        DistanceKind::EuclInterp { direction, .. } => eucl_value(x, y, direction)?,
        DistanceKind::SoftDtw { gamma } => soft_dtw_value(x, y, gamma)?,
        DistanceKind::HardDtw => hard_dtw(x, y)?,
        DistanceKind::Wasserstein {
            epsilon,
            iters,
            pos_weight,
            tol,
        } => wasserstein_with_tol(x, y, epsilon, iters, pos_weight, tol)?.value,
    })
}

/// Distance value and gradient.
pub fn distance_with_grad(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    kind: &DistanceKind,
) -> Result<(f64, KernelGrad)> {
    match *kind {
        DistanceKind::EuclInterp { direction, .. } => eucl_dist(x, y, direction),
        DistanceKind::SoftDtw { gamma } => soft_dtw(x, y, gamma),
        DistanceKind::HardDtw => Err(Error::InvalidArgument(
            "hard DTW has no gradient; use soft DTW for training".into(),
        )),
        DistanceKind::Wasserstein {
            epsilon,
            iters,
            pos_weight,
            tol,
        } => {
            let out = wasserstein_with_tol(x, y, epsilon, iters, pos_weight, tol)?;
            Ok((out.value, out.grad))
        }
    }
}

pub(crate) fn check_dims(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<()> {
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(Error::ShapeMismatch("sequences must have at least one frame".into()));
    }
    if x.ncols() != y.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "channel mismatch: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::ShapeMismatch("sequences must have at least one channel".into()));
    }
    Ok(())
}

/// Squared Euclidean distance between two frames divided by their width.
#[inline]
pub(crate) fn frame_cost(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (p, q) in a.iter().zip(b) {
        let d = p - q;
        acc += d * d;
    }
    acc / a.len() as f64
}

/// Full `T_x × T_y` frame cost matrix.
pub(crate) fn cost_matrix(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Array2<f64> {
    let x = x.as_standard_layout();
    let y = y.as_standard_layout();
    let mut cost = Array2::zeros((x.nrows(), y.nrows()));
    for (i, xr) in x.outer_iter().enumerate() {
        let xs = xr.to_slice().expect("standard layout");
        for (j, yr) in y.outer_iter().enumerate() {
            cost[[i, j]] = frame_cost(xs, yr.to_slice().expect("standard layout"));
        }
    }
    cost
}

/// Accumulates `dcost` (∂f/∂cost, `T_x × T_y`) into frame gradients, using
/// ∂cost(i,j)/∂x_i = 2 (x_i − y_j) / c and the negation for y_j.
pub(crate) fn cost_matrix_backward(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    dcost: &Array2<f64>,
) -> KernelGrad {
    let c = x.ncols() as f64;
    let mut grad_x = Array2::zeros(x.raw_dim());
    let mut grad_y = Array2::zeros(y.raw_dim());
    for i in 0..x.nrows() {
        for j in 0..y.nrows() {
            let w = dcost[[i, j]];
            if w == 0.0 {
                continue;
            }
            let s = 2.0 * w / c;
            for ch in 0..x.ncols() {
                let d = s * (x[[i, ch]] - y[[j, ch]]);
                grad_x[[i, ch]] += d;
                grad_y[[j, ch]] -= d;
            }
        }
    }
    KernelGrad { grad_x, grad_y }
}
