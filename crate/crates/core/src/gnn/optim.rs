use super::params::ModelParams;
use crate::error::{Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(like: &ModelParams) -> Self {
        AdamState {
            m: ModelParams::zeros_like(like),
            v: ModelParams::zeros_like(like),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(Error::structural(
            "adam: parameter and gradient shapes differ",
        ));
    }
    if !grads.is_finite() {
        return Err(Error::numeric("adam: non-finite gradient"));
    }
    state.step += 1;
    let t = state.step as i32;
    let correct1 = 1.0 - ADAM_BETA1.powi(t);
    let correct2 = 1.0 - ADAM_BETA2.powi(t);

    let AdamState { m, v, .. } = state;
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(m.tensors_mut())
        .zip(v.tensors_mut())
    {
        for i in 0..p.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
            let m_hat = m[i] / correct1;
            let v_hat = v[i] / correct2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
    }
    Ok(())
}
