//! Row-wise softmax and the cross-entropy loss over one-hot targets.

use crate::error::{Error, Result};
use crate::nn::real::{cast, Real};
use crate::nn::tensor::Tensor;

/// Guard added inside the logarithm of the cross-entropy.
pub const LOG_EPSILON: f64 = 1e-12;

/// Max-shifted softmax over the last axis of a `[B, C]` tensor.
pub fn softmax<F: Real>(logits: &Tensor<F>) -> Result<Tensor<F>> {
    let (rows, cols) = logits.expect_rank2("softmax")?;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let row = logits.row(r);
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let start = out.len();
        let mut total = F::zero();
        for &v in row {
            let e = (v - max).exp();
            total = total + e;
            out.push(e);
        }
        for v in &mut out[start..] {
            *v = *v / total;
        }
    }
    let out = Tensor::from_vec(&[rows, cols], out)?;
    out.check_finite("softmax")?;
    Ok(out)
}

fn validate_targets<F: Real>(probs: &Tensor<F>, targets: &Tensor<F>) -> Result<(usize, usize)> {
    let (rows, cols) = probs.expect_rank2("cross_entropy")?;
    if targets.shape() != probs.shape() {
        return Err(Error::Shape {
            op: "cross_entropy",
            expected: probs.shape().to_vec(),
            found: targets.shape().to_vec(),
        });
    }
    for r in 0..rows {
        let row = targets.row(r);
        let ones = row.iter().filter(|&&v| v == F::one()).count();
        let zeros = row.iter().filter(|&&v| v == F::zero()).count();
        if ones != 1 || ones + zeros != cols {
            return Err(Error::InvalidTarget { row: r });
        }
    }
    Ok((rows, cols))
}

/// Mean over the batch of `−Σ_c target·log(max(prob, ε))`.
pub fn cross_entropy<F: Real>(probs: &Tensor<F>, targets: &Tensor<F>) -> Result<F> {
    let (rows, _) = validate_targets(probs, targets)?;
    let eps: F = cast(LOG_EPSILON);
    let total = probs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .filter(|(_, &t)| t != F::zero())
        .map(|(&p, &t)| t * p.max(eps).ln())
        .fold(F::zero(), |a, b| a + b);
    let loss = -total / cast(rows as f64);
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            op: "cross_entropy",
            index: 0,
        });
    }
    Ok(loss)
}

/// Gradient of `cross_entropy(softmax(logits))` with respect to the logits: `(probs − targets)/B`.
pub fn softmax_cross_entropy_backward<F: Real>(
    probs: &Tensor<F>,
    targets: &Tensor<F>,
) -> Result<Tensor<F>> {
    let (rows, cols) = validate_targets(probs, targets)?;
    let scale: F = cast(rows as f64);
    let data = probs
        .as_slice()
        .iter()
        .zip(targets.as_slice())
        .map(|(&p, &t)| (p - t) / scale)
        .collect();
    Tensor::from_vec(&[rows, cols], data)
}

/// One-hot encodes class indices into a `[labels.len(), classes]` tensor.
pub fn one_hot<F: Real>(labels: &[usize], classes: usize) -> Result<Tensor<F>> {
    let mut t = Tensor::zeros(&[labels.len(), classes]);
    for (r, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::Data(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        t.as_mut_slice()[r * classes + label] = F::one();
    }
    Ok(t)
}
