//! Single-layer LSTM with last-real-step readout and backpropagation through time.
//!
//! Gate order is input, forget, candidate, output. Each gate owns a weight
//! matrix of shape `[input + hidden, hidden]` applied to the concatenation
//! `[x_t, h_{t-1}]`, plus a bias of length `hidden`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::activation::sigmoid;
use crate::nn::init::glorot_uniform;
use crate::nn::linalg::{gemm, gemm_a_bt, gemm_at_b_acc};
use crate::nn::real::Real;
use crate::nn::tensor::{Parameter, Tensor};

const GATES: [&str; 4] = ["input", "forget", "cell", "output"];

#[derive(Debug, Clone)]
pub struct LstmCell<F> {
    input_size: usize,
    hidden_size: usize,
    /// Indexed by gate: input, forget, candidate, output.
    pub weights: [Parameter<F>; 4],
    pub biases: [Parameter<F>; 4],
}

#[derive(Debug, Clone)]
struct StepCache<F> {
    z: Vec<F>,
    gates: [Vec<F>; 4],
    c_prev: Vec<F>,
    tanh_c: Vec<F>,
}

/// Activations retained by [`LstmCell::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmCache<F> {
    batch: usize,
    steps_total: usize,
    lengths: Vec<usize>,
    steps: Vec<StepCache<F>>,
}

impl<F: Real> LstmCell<F> {
    /// Glorot-uniform weights, forget-gate bias 1, other biases 0.
    pub fn new<R: Rng + ?Sized>(name: &str, input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let rows = input_size + hidden_size;
        let weights = GATES.map(|g| {
            Parameter::new(
                format!("{name}.w_{g}"),
                glorot_uniform(&[rows, hidden_size], rows, hidden_size, rng),
            )
        });
        let biases = GATES.map(|g| {
            let mut b = Parameter::zeros(format!("{name}.b_{g}"), &[hidden_size]);
            if g == "forget" {
                b.value.fill(F::one());
            }
            b
        });
        LstmCell {
            input_size,
            hidden_size,
            weights,
            biases,
        }
    }

    /// All parameters zero, including the forget bias.
    pub fn zeros(name: &str, input_size: usize, hidden_size: usize) -> Self {
        let rows = input_size + hidden_size;
        LstmCell {
            input_size,
            hidden_size,
            weights: GATES.map(|g| Parameter::zeros(format!("{name}.w_{g}"), &[rows, hidden_size])),
            biases: GATES.map(|g| Parameter::zeros(format!("{name}.b_{g}"), &[hidden_size])),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    /// Runs the recurrence over `seq: [B, T, I]` and returns `h` at step
    /// `lengths[b] − 1` for every row. Steps past a row's length are computed
    /// but never read.
    pub fn forward(&self, seq: &Tensor<F>, lengths: &[usize]) -> Result<(Tensor<F>, LstmCache<F>)> {
        let (batch, steps_total) = match seq.shape() {
            &[b, t, i] if i == self.input_size => (b, t),
            other => {
                return Err(Error::Shape {
                    op: "lstm",
                    expected: vec![lengths.len(), other.get(1).copied().unwrap_or(0), self.input_size],
                    found: other.to_vec(),
                })
            }
        };
        if lengths.len() != batch {
            return Err(Error::Shape {
                op: "lstm lengths",
                expected: vec![batch],
                found: vec![lengths.len()],
            });
        }
        for (row, &length) in lengths.iter().enumerate() {
            if length == 0 || length > steps_total {
                return Err(Error::InvalidLength {
                    row,
                    length,
                    max: steps_total,
                });
            }
        }

        let (input, hidden) = (self.input_size, self.hidden_size);
        let width = input + hidden;
        let run_steps = lengths.iter().copied().max().unwrap_or(0);
        let x = seq.as_slice();

        let mut h = vec![F::zero(); batch * hidden];
        let mut c = vec![F::zero(); batch * hidden];
        let mut out = vec![F::zero(); batch * hidden];
        let mut steps = Vec::with_capacity(run_steps);

        for t in 0..run_steps {
            let mut z = vec![F::zero(); batch * width];
            for b in 0..batch {
                let src = &x[(b * steps_total + t) * input..(b * steps_total + t + 1) * input];
                z[b * width..b * width + input].copy_from_slice(src);
                z[b * width + input..(b + 1) * width].copy_from_slice(&h[b * hidden..(b + 1) * hidden]);
            }

            let gates: [Vec<F>; 4] = std::array::from_fn(|k| {
                let bias = self.biases[k].value.as_slice();
                let mut a = Vec::with_capacity(batch * hidden);
                for _ in 0..batch {
                    a.extend_from_slice(bias);
                }
                gemm(batch, width, hidden, F::one(), &z, self.weights[k].value.as_slice(), F::one(), &mut a);
                if k == 2 {
                    a.iter_mut().for_each(|v| *v = v.tanh());
                } else {
                    a.iter_mut().for_each(|v| *v = sigmoid(*v));
                }
                a
            });

            let c_prev = c.clone();
            let mut tanh_c = vec![F::zero(); batch * hidden];
            for j in 0..batch * hidden {
                c[j] = gates[1][j] * c_prev[j] + gates[0][j] * gates[2][j];
                tanh_c[j] = c[j].tanh();
                h[j] = gates[3][j] * tanh_c[j];
            }
            for (b, &length) in lengths.iter().enumerate() {
                if length - 1 == t {
                    out[b * hidden..(b + 1) * hidden].copy_from_slice(&h[b * hidden..(b + 1) * hidden]);
                }
            }
            steps.push(StepCache {
                z,
                gates,
                c_prev,
                tanh_c,
            });
        }

        let out = Tensor::from_vec(&[batch, hidden], out)?;
        out.check_finite("lstm")?;
        Ok((
            out,
            LstmCache {
                batch,
                steps_total,
                lengths: lengths.to_vec(),
                steps,
            },
        ))
    }

    /// Accumulates parameter gradients and returns `d seq: [B, T, I]`.
    pub fn backward(&mut self, cache: &LstmCache<F>, d_out: &Tensor<F>) -> Result<Tensor<F>> {
        let (batch, hidden, input) = (cache.batch, self.hidden_size, self.input_size);
        if d_out.shape() != [batch, hidden] {
            return Err(Error::Shape {
                op: "lstm backward",
                expected: vec![batch, hidden],
                found: d_out.shape().to_vec(),
            });
        }
        let width = input + hidden;
        let mut d_seq = vec![F::zero(); batch * cache.steps_total * input];
        let mut dh = vec![F::zero(); batch * hidden];
        let mut dc = vec![F::zero(); batch * hidden];
        let mut da: [Vec<F>; 4] = std::array::from_fn(|_| vec![F::zero(); batch * hidden]);
        let mut dz = vec![F::zero(); batch * width];
        let d_out = d_out.as_slice();

        for (t, step) in cache.steps.iter().enumerate().rev() {
            for (b, &length) in cache.lengths.iter().enumerate() {
                if length - 1 == t {
                    for j in b * hidden..(b + 1) * hidden {
                        dh[j] = dh[j] + d_out[j];
                    }
                }
            }
            let [gi, gf, gg, go] = &step.gates;
            for j in 0..batch * hidden {
                let tc = step.tanh_c[j];
                let d_o = dh[j] * tc;
                let dcj = dc[j] + dh[j] * go[j] * (F::one() - tc * tc);
                let d_i = dcj * gg[j];
                let d_g = dcj * gi[j];
                let d_f = dcj * step.c_prev[j];
                dc[j] = dcj * gf[j];
                da[0][j] = d_i * gi[j] * (F::one() - gi[j]);
                da[1][j] = d_f * gf[j] * (F::one() - gf[j]);
                da[2][j] = d_g * (F::one() - gg[j] * gg[j]);
                da[3][j] = d_o * go[j] * (F::one() - go[j]);
            }
            let mut first = true;
            for k in 0..4 {
                gemm_at_b_acc(batch, width, hidden, &step.z, &da[k], self.weights[k].grad.as_mut_slice());
                let db = self.biases[k].grad.as_mut_slice();
                for b in 0..batch {
                    for (g, &d) in db.iter_mut().zip(&da[k][b * hidden..(b + 1) * hidden]) {
                        *g = *g + d;
                    }
                }
                let beta = if first { F::zero() } else { F::one() };
                gemm_a_bt(batch, hidden, width, &da[k], self.weights[k].value.as_slice(), beta, &mut dz);
                first = false;
            }
            for b in 0..batch {
                let dst = (b * cache.steps_total + t) * input;
                d_seq[dst..dst + input].copy_from_slice(&dz[b * width..b * width + input]);
                dh[b * hidden..(b + 1) * hidden].copy_from_slice(&dz[b * width + input..(b + 1) * width]);
            }
        }
        Tensor::from_vec(&[batch, cache.steps_total, input], d_seq)
    }

    pub fn parameters(&self) -> Vec<&Parameter<F>> {
        self.weights.iter().chain(self.biases.iter()).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter<F>> {
        self.weights.iter_mut().chain(self.biases.iter_mut()).collect()
    }
}
