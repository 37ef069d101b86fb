//! Independent references for the differentiable pieces: central finite
//! differences and brute-force distance oracles.
//!
//! The oracles here recompute frame costs with their own arithmetic and do
//! not call into [`crate::kernels`].

mod gradcheck;
mod oracles;
pub mod targets;

pub use gradcheck::{compare_gradients, numeric_gradient, relative_error, GradCheckReport, DEFAULT_STEP};
pub use oracles::{brute_dtw, brute_wasserstein, DtwMode, MAX_PATHS};
pub use targets::{run_all, run_target, COMPONENT_THRESHOLD, PIPELINE_THRESHOLD, TARGETS};
