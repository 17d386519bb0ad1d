//! Adam with bias correction.

use crate::encoder::EncoderParams;
use crate::exec::Executor;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

const CHUNK: usize = 8192;

/// First and second moment estimates for one encoder.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    step: u64,
    m: EncoderParams,
    v: EncoderParams,
}

impl AdamState {
    pub fn new(params: &EncoderParams) -> Self {
        AdamState { step: 0, m: params.zeros_like(), v: params.zeros_like() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// One Adam update of `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut EncoderParams, grads: &EncoderParams, lr: f64, exec: &Executor) {
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let m_tensors = state.m.tensors_mut();
    let v_tensors = state.v.tensors_mut();
    for (((p, m), v), g) in params.tensors_mut().into_iter().zip(m_tensors).zip(v_tensors).zip(grads.tensors()) {
        exec.zip_chunks_mut(p, m, v, g, CHUNK, |p, m, v, g| {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * gk;
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
            }
        });
    }
}
