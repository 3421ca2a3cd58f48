use super::GnnError;
use crate::dense::DenseMatrix;
use crate::scalar::Scalar;

fn check<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize], mask: &[bool]) -> Result<usize, GnnError> {
    if labels.len() != logits.rows() || mask.len() != logits.rows() {
        return Err(GnnError::Shape(crate::dense::ShapeError::new(
            "masked_cross_entropy",
            format!("{} logit rows, {} labels, {} mask entries", logits.rows(), labels.len(), mask.len()),
        )));
    }
    let count = mask.iter().filter(|&&m| m).count();
    if count == 0 {
        return Err(GnnError::EmptyMask);
    }
    for (i, (&l, &m)) in labels.iter().zip(mask).enumerate() {
        if m && l >= logits.cols() {
            return Err(GnnError::LabelOutOfRange { node: i, label: l, classes: logits.cols() });
        }
    }
    Ok(count)
}

/// Max-shifted log-softmax of one row.
fn log_softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let lse = row.iter().fold(T::zero(), |s, &v| s + (v - max).exp()).ln() + max;
    row.iter().map(|&v| v - lse).collect()
}

/// Mean negative log-likelihood over masked rows.
pub fn masked_cross_entropy<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize], mask: &[bool]) -> Result<T, GnnError> {
    masked_cross_entropy_grad(logits, labels, mask).map(|(l, _)| l)
}

/// Loss and `∂loss/∂logits` (zero on unmasked rows).
pub fn masked_cross_entropy_grad<T: Scalar>(
    logits: &DenseMatrix<T>,
    labels: &[usize],
    mask: &[bool],
) -> Result<(T, DenseMatrix<T>), GnnError> {
    let count = check(logits, labels, mask)?;
    let scale = T::one() / T::from_usize_lossy(count);
    let mut loss = T::zero();
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    for i in (0..logits.rows()).filter(|&i| mask[i]) {
        let lp = log_softmax(logits.row(i));
        loss -= lp[labels[i]];
        let g = grad.row_mut(i);
        for (k, &l) in lp.iter().enumerate() {
            g[k] = l.exp() * scale;
        }
        g[labels[i]] -= scale;
    }
    Ok((loss * scale, grad))
}

/// Fraction of masked rows whose argmax (lowest index on ties) equals the label.
pub fn masked_accuracy<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize], mask: &[bool]) -> f64 {
    let mut hit = 0usize;
    let mut total = 0usize;
    for i in (0..logits.rows()).filter(|&i| mask[i]) {
        let row = logits.row(i);
        let mut best = 0;
        for k in 1..row.len() {
            if row[k] > row[best] {
                best = k;
            }
        }
        hit += usize::from(best == labels[i]);
        total += 1;
    }
    if total == 0 { 0.0 } else { hit as f64 / total as f64 }
}
