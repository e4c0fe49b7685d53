use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

fn rows<T: Scalar>(logits: &Tensor<T>, op: &'static str) -> Result<(usize, usize)> {
    match logits.shape() {
        [b, k] if *k > 0 => Ok((*b, *k)),
        s => Err(Error::Shape {
            op,
            left: s.to_vec(),
            right: vec![0, 0],
        }),
    }
}

/// Row-wise max-shifted softmax in `f64`: `(max, log-sum-exp of shifted row)`.
fn row_stats<T: Scalar>(row: &[T]) -> (f64, f64) {
    let max = row.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = row.iter().map(|v| (v.as_f64() - max).exp()).sum();
    (max, sum.ln())
}

pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (_, k) = rows(logits, "softmax")?;
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(k) {
        let (max, lse) = row_stats(row);
        out.extend(row.iter().map(|v| T::from_f64_lossy((v.as_f64() - max - lse).exp())));
    }
    Tensor::from_vec(logits.shape().to_vec(), out)
}

/// Mean sparse softmax cross-entropy and its gradient w.r.t. the logits,
/// `(softmax - onehot) / batch`.
pub fn cross_entropy_loss<T: Scalar>(logits: &Tensor<T>, labels: &[u32]) -> Result<(T, Tensor<T>)> {
    let (b, k) = rows(logits, "cross_entropy")?;
    if labels.len() != b {
        return Err(Error::invalid(format!("{} labels for a batch of {b}", labels.len())));
    }
    if let Some(l) = labels.iter().find(|l| **l as usize >= k) {
        return Err(Error::invalid(format!("label {l} out of range for {k} classes")));
    }
    let scale = 1.0 / b as f64;
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &label) in logits.data().chunks_exact(k).zip(labels) {
        let (max, lse) = row_stats(row);
        loss += lse - (row[label as usize].as_f64() - max);
        for (j, v) in row.iter().enumerate() {
            let p = (v.as_f64() - max - lse).exp();
            let target = if j == label as usize { 1.0 } else { 0.0 };
            grad.push(T::from_f64_lossy((p - target) * scale));
        }
    }
    Ok((T::from_f64_lossy(loss * scale), Tensor::from_vec(logits.shape().to_vec(), grad)?))
}

/// Index of the largest entry of each row; ties go to the lowest index.
pub fn argmax_rows<T: Scalar>(t: &Tensor<T>) -> Vec<usize> {
    let k = t.shape().last().copied().unwrap_or(1).max(1);
    t.data()
        .chunks_exact(k)
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
