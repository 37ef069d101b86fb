use ndarray::Array2;

use super::infonce::{log_temperature_grad, symmetric_infonce};
use super::zscore::{zscore, ZAxis, ZSCORE_EPS};
use super::{LossResult, Temperature};
use crate::{Error, Result};

/// Sequential contrastive loss on a `B × B` distance matrix `d`
/// (`d[i][j]` = distance between video `i` and audio `j`).
///
/// With `normalize`, the video→audio term uses the row-wise z-score of `d`
/// and the audio→video term the column-wise one; gradients flow through the
/// normalization statistics. Without it both terms use `d` directly.
pub fn scav_loss(d: &Array2<f64>, lambda: Temperature, normalize: bool) -> Result<LossResult> {
    let b = d.nrows();
    if b < 2 || d.ncols() != b {
        return Err(Error::ShapeMismatch(format!(
            "scav_loss needs a square matrix with B >= 2, got {:?}",
            d.dim()
        )));
    }
    if let Some(pos) = d.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("distance matrix entry {pos}")));
    }
    let lam = lambda.value();
    let (rows, cols) = if normalize {
        (
            Some(zscore(d.view(), ZAxis::Rows, ZSCORE_EPS)?),
            Some(zscore(d.view(), ZAxis::Cols, ZSCORE_EPS)?),
        )
    } else {
        (None, None)
    };
    let d_v2a = rows.as_ref().map_or(d, |z| &z.output);
    let d_a2v = cols.as_ref().map_or(d, |z| &z.output);
    let row_logits = d_v2a.mapv(|v| -v / lam);
    let col_logits = d_a2v.mapv(|v| -v / lam);
    let (loss, g_row, g_col) = symmetric_infonce(&row_logits, &col_logits);

    let grad_log_lambda =
        log_temperature_grad(&row_logits, &g_row) + log_temperature_grad(&col_logits, &g_col);
    // logits = −d̄/λ
    let g_v2a = g_row.mapv(|g| -g / lam);
    let g_a2v = g_col.mapv(|g| -g / lam);
    let grad_distances = match (rows, cols) {
        (Some(r), Some(c)) => r.backward(g_v2a.view()) + c.backward(g_a2v.view()),
        _ => g_v2a + g_a2v,
    };
    Ok(LossResult {
        loss,
        grad_distances: Some(grad_distances),
        grad_similarities: None,
        grad_sequences: None,
        grad_log_lambda,
        grad_log_tau: 0.0,
    })
}
