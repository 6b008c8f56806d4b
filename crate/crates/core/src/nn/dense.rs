use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::init::glorot_uniform;
use crate::nn::linalg::{gemm, gemm_a_bt, gemm_at_b_acc};
use crate::nn::real::Real;
use crate::nn::tensor::{Parameter, Tensor};

/// Affine layer `out = x·W + b` with `W: [in, out]` and a row-broadcast bias.
#[derive(Debug, Clone)]
pub struct Dense<F> {
    pub weight: Parameter<F>,
    pub bias: Parameter<F>,
}

impl<F: Real> Dense<F> {
    pub fn new<R: Rng + ?Sized>(name: &str, inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Dense {
            weight: Parameter::new(
                format!("{name}.weight"),
                glorot_uniform(&[inputs, outputs], inputs, outputs, rng),
            ),
            bias: Parameter::zeros(format!("{name}.bias"), &[outputs]),
        }
    }

    pub fn from_parts(weight: Parameter<F>, bias: Parameter<F>) -> Result<Self> {
        let (_, o) = weight.value.expect_rank2("dense")?;
        if bias.shape() != [o] {
            return Err(Error::Shape {
                op: "dense bias",
                expected: vec![o],
                found: bias.shape().to_vec(),
            });
        }
        Ok(Dense { weight, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let (batch, inputs) = x.expect_rank2("dense")?;
        if inputs != self.inputs() {
            return Err(Error::Shape {
                op: "dense",
                expected: vec![batch, self.inputs()],
                found: x.shape().to_vec(),
            });
        }
        let outputs = self.outputs();
        let bias = self.bias.value.as_slice();
        let mut out = Vec::with_capacity(batch * outputs);
        for _ in 0..batch {
            out.extend_from_slice(bias);
        }
        gemm(
            batch,
            inputs,
            outputs,
            F::one(),
            x.as_slice(),
            self.weight.value.as_slice(),
            F::one(),
            &mut out,
        );
        let out = Tensor::from_vec(&[batch, outputs], out)?;
        out.check_finite("dense")?;
        Ok(out)
    }

    /// Accumulates `dW += xᵀ·dOut`, `db += Σ_rows dOut`, returns `dx = dOut·Wᵀ`.
    pub fn backward(&mut self, x: &Tensor<F>, d_out: &Tensor<F>) -> Result<Tensor<F>> {
        let (batch, inputs) = x.expect_rank2("dense backward")?;
        let outputs = self.outputs();
        if d_out.shape() != [batch, outputs] {
            return Err(Error::Shape {
                op: "dense backward",
                expected: vec![batch, outputs],
                found: d_out.shape().to_vec(),
            });
        }
        gemm_at_b_acc(
            batch,
            inputs,
            outputs,
            x.as_slice(),
            d_out.as_slice(),
            self.weight.grad.as_mut_slice(),
        );
        let db = self.bias.grad.as_mut_slice();
        for r in 0..batch {
            for (g, &d) in db.iter_mut().zip(d_out.row(r)) {
                *g = *g + d;
            }
        }
        let mut dx = vec![F::zero(); batch * inputs];
        gemm_a_bt(
            batch,
            outputs,
            inputs,
            d_out.as_slice(),
            self.weight.value.as_slice(),
            F::zero(),
            &mut dx,
        );
        Tensor::from_vec(&[batch, inputs], dx)
    }

    pub fn parameters(&self) -> [&Parameter<F>; 2] {
        [&self.weight, &self.bias]
    }

    pub fn parameters_mut(&mut self) -> [&mut Parameter<F>; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(w: &[f64], b: &[f64], i: usize, o: usize) -> Dense<f64> {
        Dense::from_parts(
            Parameter::new("w", Tensor::from_vec(&[i, o], w.to_vec()).unwrap()),
            Parameter::new("b", Tensor::from_vec(&[o], b.to_vec()).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn identity_input_returns_weights() {
        let d = layer(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0], 2, 2);
        let x = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.forward(&x).unwrap().as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn zero_weights_broadcast_bias() {
        let d = layer(&[0.0; 6], &[0.5, -1.5], 3, 2);
        let x = Tensor::from_vec(&[2, 3], vec![9.0, -2.0, 4.0, 1.0, 1.0, 1.0]).unwrap();
        let y = d.forward(&x).unwrap();
        assert_eq!(y.row(0), &[0.5, -1.5]);
        assert_eq!(y.row(1), &[0.5, -1.5]);
    }

    #[test]
    fn shape_mismatch_names_both_shapes() {
        let d = layer(&[0.0; 6], &[0.0, 0.0], 3, 2);
        let x = Tensor::<f64>::zeros(&[2, 4]);
        let err = d.forward(&x).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[2, 4]"), "{err}");
    }

    #[test]
    fn backward_accumulates() {
        let mut d = layer(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0], 2, 2);
        let x = Tensor::from_vec(&[1, 2], vec![1.0, 2.0]).unwrap();
        let g = Tensor::from_vec(&[1, 2], vec![1.0, -1.0]).unwrap();
        let dx = d.backward(&x, &g).unwrap();
        assert_eq!(dx.as_slice(), &[-1.0, -1.0]);
        assert_eq!(d.weight.grad.as_slice(), &[1.0, -1.0, 2.0, -2.0]);
        d.backward(&x, &g).unwrap();
        assert_eq!(d.bias.grad.as_slice(), &[2.0, -2.0]);
    }
}
