use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::real::cast;
use crate::nn::{Parameter, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

fn check_grads<F: Real>(params: &[&mut Parameter<F>]) -> Result<()> {
    for p in params {
        if p.grad.as_slice().iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { param: p.name.clone() });
        }
    }
    Ok(())
}

/// Plain gradient descent: `p ← p − lr·g`.
pub fn sgd_step<F: Real>(params: &mut [&mut Parameter<F>], lr: f64) -> Result<()> {
    check_grads(params)?;
    let lr: F = cast(lr);
    for p in params.iter_mut() {
        let Parameter { value, grad, .. } = &mut **p;
        for (v, &g) in value.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *v = *v - lr * g;
        }
    }
    Ok(())
}

/// First and second moment estimates, one buffer per parameter.
#[derive(Debug, Clone, Default)]
pub struct AdamState<F> {
    pub t: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    pub fn new() -> Self {
        AdamState {
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }
}

/// Adam with bias correction (β1 = 0.9, β2 = 0.999, ε = 1e-8).
pub fn adam_step<F: Real>(params: &mut [&mut Parameter<F>], lr: f64, state: &mut AdamState<F>) -> Result<()> {
    check_grads(params)?;
    if state.m.is_empty() {
        state.m = params.iter().map(|p| vec![F::zero(); p.value.len()]).collect();
        state.v = state.m.clone();
    }
    if state.m.len() != params.len() {
        return Err(Error::Config(format!(
            "optimizer state tracks {} parameters, model has {}",
            state.m.len(),
            params.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2): (F, F) = (cast(ADAM_BETA1), cast(ADAM_BETA2));
    let step: F = cast(lr / (1.0 - ADAM_BETA1.powi(t)));
    let v_corr: F = cast(1.0 / (1.0 - ADAM_BETA2.powi(t)));
    let eps: F = cast(ADAM_EPSILON);
    for (i, p) in params.iter_mut().enumerate() {
        let Parameter { value, grad, .. } = &mut **p;
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, (w, &g)) in value.as_mut_slice().iter_mut().zip(grad.as_slice()).enumerate() {
            m[j] = b1 * m[j] + (F::one() - b1) * g;
            v[j] = b2 * v[j] + (F::one() - b2) * g * g;
            *w = *w - step * m[j] / ((v[j] * v_corr).sqrt() + eps);
        }
    }
    Ok(())
}

/// Either optimizer behind one interface.
#[derive(Debug, Clone)]
pub enum Optimizer<F> {
    Sgd,
    Adam(AdamState<F>),
}

impl<F: Real> Optimizer<F> {
    pub fn new(kind: OptimizerKind) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Adam => Optimizer::Adam(AdamState::new()),
        }
    }

    pub fn step(&mut self, params: &mut [&mut Parameter<F>], lr: f64) -> Result<()> {
        match self {
            Optimizer::Sgd => sgd_step(params, lr),
            Optimizer::Adam(state) => adam_step(params, lr, state),
        }
    }
}
