//! Adam over a flat parameter vector.
//!
//! Moment state is kept in f64 regardless of the parameter precision, so an
//! f32 model still gets accurate moment tracking; updates are computed in
//! f64 and cast back once per parameter.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::invalid("lr", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta1/beta2", "must be in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", "must be positive"));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }
}

/// One update with bias correction. Rejects non-finite gradients before
/// touching any state, so a failed step leaves parameters intact.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[f64],
    state: &mut AdamState,
    hyper: &AdamParams,
) -> Result<()> {
    hyper.validate()?;
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ShapeMismatch {
            context: "adam_step",
            expected: vec![params.len()],
            got: vec![grads.len(), state.m.len()],
        });
    }
    if let Some(_bad) = grads.iter().find(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            what: "gradient",
            step: state.step + 1,
        });
    }
    state.step += 1;
    let t = state.step;
    let b1 = hyper.beta1;
    let b2 = hyper.beta2;
    let bc1 = 1.0 - b1.powi(t as i32);
    let bc2 = 1.0 - b2.powi(t as i32);
    for k in 0..params.len() {
        let g = grads[k];
        state.m[k] = b1 * state.m[k] + (1.0 - b1) * g;
        state.v[k] = b2 * state.v[k] + (1.0 - b2) * g * g;
        let m_hat = state.m[k] / bc1;
        let v_hat = state.v[k] / bc2;
        let upd = hyper.lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
        params[k] = T::from_f64_lossy(params[k].to_f64_lossy() - upd);
    }
    Ok(())
}
