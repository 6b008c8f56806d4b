use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::real::{cast, Real};
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    #[default]
    Eval,
}

/// Per-element multiplier recorded by a training-mode dropout pass.
#[derive(Debug, Clone)]
pub struct DropoutMask<F> {
    scale: Vec<F>,
}

impl<F: Real> DropoutMask<F> {
    pub fn dropped(&self) -> usize {
        self.scale.iter().filter(|&&s| s == F::zero()).count()
    }

    pub fn backward(&self, d_out: &Tensor<F>) -> Result<Tensor<F>> {
        if d_out.len() != self.scale.len() {
            return Err(Error::Shape {
                op: "dropout backward",
                expected: vec![self.scale.len()],
                found: d_out.shape().to_vec(),
            });
        }
        let data = d_out
            .as_slice()
            .iter()
            .zip(&self.scale)
            .map(|(&d, &s)| d * s)
            .collect();
        Tensor::from_vec(d_out.shape(), data)
    }
}

/// Inverted dropout. In train mode every element is zeroed with probability
/// `rate` and survivors are scaled by `1/(1−rate)`; eval mode returns the input
/// unchanged and no mask.
pub fn dropout<F: Real, R: Rng + ?Sized>(
    x: &Tensor<F>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor<F>, Option<DropoutMask<F>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} not in [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep: F = cast(1.0 / (1.0 - rate));
    let scale: Vec<F> = (0..x.len())
        .map(|_| {
            if rng.random::<f64>() < rate {
                F::zero()
            } else {
                keep
            }
        })
        .collect();
    let data = x
        .as_slice()
        .iter()
        .zip(&scale)
        .map(|(&v, &s)| v * s)
        .collect();
    Ok((Tensor::from_vec(x.shape(), data)?, Some(DropoutMask { scale })))
}
