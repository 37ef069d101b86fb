use std::fmt;

use crate::{Error, Result};

/// Central-difference step. Inputs are scaled to unit RMS before checking.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Central differences `(f(x+h·e) − f(x−h·e)) / 2h` at the requested
/// coordinates (all of them when `coords` is `None`).
pub fn numeric_gradient<F>(f: F, point: &[f64], h: f64, coords: Option<&[usize]>) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..point.len()).collect();
            &all
        }
    };
    let mut probe = point.to_vec();
    let mut out = Vec::with_capacity(coords.len());
    for &i in coords {
        if i >= point.len() {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} out of range for {} parameters",
                point.len()
            )));
        }
        probe[i] = point[i] + h;
        let plus = f(&probe);
        probe[i] = point[i] - h;
        let minus = f(&probe);
        probe[i] = point[i];
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NonFinite(format!(
                "function evaluation near coordinate {i}"
            )));
        }
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub target: String,
    pub coordinates: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<28} {} coords={:<4} max_rel={:.3e} max_abs={:.3e} threshold={:.0e}",
            self.target,
            if self.passed { "PASS" } else { "FAIL" },
            self.coordinates,
            self.max_rel_error,
            self.max_abs_error,
            self.threshold
        )
    }
}

pub fn compare_gradients(
    target: &str,
    analytic: &[f64],
    numeric: &[f64],
    threshold: f64,
) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for (&a, &n) in analytic.iter().zip(numeric) {
        max_rel = max_rel.max(relative_error(a, n));
        max_abs = max_abs.max((a - n).abs());
    }
    GradCheckReport {
        target: target.to_string(),
        coordinates: analytic.len(),
        max_rel_error: max_rel,
        max_abs_error: max_abs,
        threshold,
        passed: max_rel < threshold,
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn square_at_three() {
        let g = numeric_gradient(|x| x[0] * x[0], &[3.0], DEFAULT_STEP, None).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn constant_function() {
        let g = numeric_gradient(|_| 4.2, &[1.0, -2.0, 0.5], DEFAULT_STEP, None).unwrap();
        assert_eq!(g, vec![0.0; 3]);
    }

    #[test]
    fn sum_of_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = numeric_gradient(|v| v.iter().map(|a| a * a).sum(), &x, DEFAULT_STEP, None).unwrap();
        for (gi, xi) in g.iter().zip(&x) {
            assert!((gi - 2.0 * xi).abs() < 1e-8);
        }
    }

    #[test]
    fn sampled_coordinates_only() {
        let g = numeric_gradient(|v| v[0] * 2.0 + v[2] * 5.0, &[0.0; 3], DEFAULT_STEP, Some(&[2])).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_evaluation_is_an_error() {
        assert!(numeric_gradient(|v| (v[0]).ln(), &[0.0], DEFAULT_STEP, None).is_err());
    }

    #[test]
    fn report_pass_flag() {
        let r = compare_gradients("t", &[1.0, 2.0], &[1.0, 2.0 + 1e-6], 1e-4);
        assert!(r.passed);
        assert!(r.max_abs_error > 0.0);
        let r = compare_gradients("t", &[1.0], &[1.1], 1e-4);
        assert!(!r.passed);
    }
}
