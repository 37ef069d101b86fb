use ndarray::Array2;

/// Symmetric InfoNCE on two `B × B` logit matrices with the positives on the
/// diagonal: rows of `row_logits` and columns of `col_logits` are each a
/// softmax over candidates. Returns the loss and ∂loss/∂logits for both.
pub(crate) fn symmetric_infonce(
    row_logits: &Array2<f64>,
    col_logits: &Array2<f64>,
) -> (f64, Array2<f64>, Array2<f64>) {
    let b = row_logits.nrows();
    let scale = 1.0 / (2 * b) as f64;
    let mut loss = 0.0;
    let mut g_row = Array2::zeros((b, b));
    let mut g_col = Array2::zeros((b, b));
    for i in 0..b {
        loss += lane_term(row_logits.row(i), i, g_row.row_mut(i), scale);
        loss += lane_term(col_logits.column(i), i, g_col.column_mut(i), scale);
    }
    (loss * scale, g_row, g_col)
}

/// `−log softmax(logits)[target]`; writes `scale·(softmax − onehot)` to `grad`.
fn lane_term(
    logits: ndarray::ArrayView1<f64>,
    target: usize,
    mut grad: ndarray::ArrayViewMut1<f64>,
    scale: f64,
) -> f64 {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&l| (l - m).exp()).sum();
    let lse = m + sum.ln();
    for (j, &l) in logits.iter().enumerate() {
        let p = (l - lse).exp();
        grad[j] = scale * (p - if j == target { 1.0 } else { 0.0 });
    }
    lse - logits[target]
}

/// ∂loss/∂log T for logits of the form `x / T`: each logit contributes
/// `−grad · logit`.
pub(crate) fn log_temperature_grad(logits: &Array2<f64>, grad: &Array2<f64>) -> f64 {
    -logits.iter().zip(grad).map(|(l, g)| l * g).sum::<f64>()
}
