use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::real::Real;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
    Relu,
}

#[inline]
pub(crate) fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

impl Activation {
    pub fn apply<F: Real>(self, x: F) -> F {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => x.max(F::zero()),
        }
    }

    /// Derivative expressed through the pre-activation `x`.
    pub fn derivative<F: Real>(self, x: F) -> F {
        match self {
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (F::one() - s)
            }
            Activation::Relu => {
                if x > F::zero() {
                    F::one()
                } else {
                    F::zero()
                }
            }
        }
    }

    pub fn forward<F: Real>(self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let data = x.as_slice().iter().map(|&v| self.apply(v)).collect();
        let out = Tensor::from_vec(x.shape(), data)?;
        out.check_finite("activation")?;
        Ok(out)
    }

    /// `dx = dOut ⊙ f'(x)` for the pre-activation `x` seen in forward.
    pub fn backward<F: Real>(self, x: &Tensor<F>, d_out: &Tensor<F>) -> Result<Tensor<F>> {
        if x.shape() != d_out.shape() {
            return Err(Error::Shape {
                op: "activation backward",
                expected: x.shape().to_vec(),
                found: d_out.shape().to_vec(),
            });
        }
        let data = x
            .as_slice()
            .iter()
            .zip(d_out.as_slice())
            .map(|(&v, &d)| d * self.derivative(v))
            .collect();
        Tensor::from_vec(x.shape(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(Activation::Sigmoid.apply(0.0f64), 0.5);
        assert_eq!(Activation::Relu.apply(-3.0f64), 0.0);
        assert_eq!(Activation::Relu.apply(3.0f64), 3.0);
        assert_eq!(Activation::Sigmoid.derivative(0.0f64), 0.25);
    }

    #[test]
    fn sigmoid_saturates_without_nan() {
        let x = Tensor::from_vec(&[3], vec![-800.0f64, 0.0, 800.0]).unwrap();
        let y = Activation::Sigmoid.forward(&x).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.5, 1.0]);
    }
}
