//! Randomized finite-difference cases for each differentiable op.
//!
//! Every case draws its inputs and parameters from `seed`, contracts the op's
//! output with a random weight tensor `R` so the objective is the scalar
//! `Σ R ⊙ op(θ)`, and compares the op's backward pass (fed `R`) against
//! central differences over every coordinate of `θ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::gradcheck::{grad_check, GradCheck};
use crate::nn::{
    cross_entropy, dropout, one_hot, softmax, softmax_cross_entropy_backward, Activation, Dense, LstmCell, Mode,
    Parameter, Tensor,
};

fn uniform(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn contract(r: &[f64], out: &Tensor<f64>) -> f64 {
    r.iter().zip(out.as_slice()).map(|(a, b)| a * b).sum()
}

fn load(params: &mut [&mut Parameter<f64>], values: &[f64]) {
    let mut at = 0;
    for p in params {
        let n = p.value.len();
        p.value.as_mut_slice().copy_from_slice(&values[at..at + n]);
        at += n;
    }
}

fn dump(params: &[&Parameter<f64>], grads: bool) -> Vec<f64> {
    params
        .iter()
        .flat_map(|p| if grads { p.grad.as_slice() } else { p.value.as_slice() }.to_vec())
        .collect()
}

/// Dense layer, gradients with respect to input, weight and bias.
pub fn dense_case(seed: u64, batch: usize, inputs: usize, outputs: usize, h: f64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Tensor::from_vec(&[batch, inputs], uniform(&mut rng, batch * inputs))?;
    let mut layer: Dense<f64> = Dense::new("d", inputs, outputs, &mut rng);
    layer.bias.value.as_mut_slice().copy_from_slice(&uniform(&mut rng, outputs));
    let r = uniform(&mut rng, batch * outputs);
    let dx = layer.backward(&x, &Tensor::from_vec(&[batch, outputs], r.clone())?)?;

    let mut point = x.to_f64_vec();
    point.extend(dump(&layer.parameters(), false));
    let mut analytic = dx.into_vec();
    analytic.extend(dump(&layer.parameters(), true));
    let nx = batch * inputs;
    let mut probe = layer.clone();
    grad_check(&point, &analytic, h, |theta| {
        load(&mut probe.parameters_mut(), &theta[nx..]);
        let x = Tensor::from_vec(&[batch, inputs], theta[..nx].to_vec()).expect("shape");
        contract(&r, &probe.forward(&x).expect("forward"))
    })
}

/// Elementwise activation. ReLU inputs are kept at least 0.05 away from the kink.
pub fn activation_case(kind: Activation, seed: u64, len: usize, h: f64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = uniform(&mut rng, len);
    if kind == Activation::Relu {
        for v in &mut x {
            if v.abs() < 0.05 {
                *v = 0.05_f64.copysign(*v) + *v;
            }
        }
    }
    let r = uniform(&mut rng, len);
    let xt = Tensor::from_vec(&[len], x.clone())?;
    let analytic = kind.backward(&xt, &Tensor::from_vec(&[len], r.clone())?)?.into_vec();
    grad_check(&x, &analytic, h, |theta| {
        let t = Tensor::from_vec(&[len], theta.to_vec()).expect("shape");
        contract(&r, &kind.forward(&t).expect("forward"))
    })
}

/// Softmax followed by mean cross-entropy, differentiated with respect to the logits.
pub fn softmax_ce_case(seed: u64, batch: usize, classes: usize, h: f64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let logits: Vec<f64> = uniform(&mut rng, batch * classes).iter().map(|v| 3.0 * v).collect();
    let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
    let targets: Tensor<f64> = one_hot(&labels, classes)?;
    let probs = softmax(&Tensor::from_vec(&[batch, classes], logits.clone())?)?;
    let analytic = softmax_cross_entropy_backward(&probs, &targets)?.into_vec();
    grad_check(&logits, &analytic, h, |z| {
        let p = softmax(&Tensor::from_vec(&[batch, classes], z.to_vec()).expect("shape")).expect("softmax");
        cross_entropy(&p, &targets).expect("targets are one-hot")
    })
}

/// Training-mode dropout with the mask held fixed (same RNG stream per evaluation).
pub fn dropout_case(seed: u64, len: usize, rate: f64, h: f64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = uniform(&mut rng, len);
    let r = uniform(&mut rng, len);
    let mask_seed = rng.random::<u64>();
    let xt = Tensor::from_vec(&[len], x.clone())?;
    let (_, mask) = dropout(&xt, rate, Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed))?;
    let rt = Tensor::from_vec(&[len], r.clone())?;
    let analytic = match mask {
        Some(m) => m.backward(&rt)?.into_vec(),
        None => r.clone(),
    };
    grad_check(&x, &analytic, h, |theta| {
        let t = Tensor::from_vec(&[len], theta.to_vec()).expect("shape");
        let (out, _) = dropout(&t, rate, Mode::Train, &mut ChaCha8Rng::seed_from_u64(mask_seed)).expect("rate");
        contract(&r, &out)
    })
}

/// LSTM over `[batch, steps, inputs]` with random lengths in `[1, steps]`;
/// gradients with respect to the sequence and every gate parameter.
pub fn lstm_case(seed: u64, batch: usize, steps: usize, inputs: usize, hidden: usize, h: f64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cell: LstmCell<f64> = LstmCell::new("l", inputs, hidden, &mut rng);
    for p in cell.parameters_mut() {
        let v = uniform(&mut rng, p.value.len());
        p.value.as_mut_slice().copy_from_slice(&v);
    }
    let shape = [batch, steps, inputs];
    let seq = uniform(&mut rng, batch * steps * inputs);
    let lengths: Vec<usize> = (0..batch).map(|_| rng.random_range(1..=steps)).collect();
    let r = uniform(&mut rng, batch * hidden);
    let (_, cache) = cell.forward(&Tensor::from_vec(&shape, seq.clone())?, &lengths)?;
    let d_seq = cell.backward(&cache, &Tensor::from_vec(&[batch, hidden], r.clone())?)?;

    let mut point = seq;
    point.extend(dump(&cell.parameters(), false));
    let mut analytic = d_seq.into_vec();
    analytic.extend(dump(&cell.parameters(), true));
    let ns = batch * steps * inputs;
    let mut probe = cell.clone();
    grad_check(&point, &analytic, h, |theta| {
        load(&mut probe.parameters_mut(), &theta[ns..]);
        let s = Tensor::from_vec(&shape, theta[..ns].to_vec()).expect("shape");
        contract(&r, &probe.forward(&s, &lengths).expect("forward").0)
    })
}
