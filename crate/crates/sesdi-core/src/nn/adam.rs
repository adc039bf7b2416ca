//! Adam with bias correction, tracking one parameter bank.

use crate::error::{Error, Result};
use crate::nn::mlp::MlpParams;
use crate::nn::MlpSpec;

#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub first_moment: MlpParams,
    pub second_moment: MlpParams,
}

impl AdamState {
    pub fn new(spec: &MlpSpec, lr: f64) -> Result<Self> {
        Ok(AdamState {
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: MlpParams::zeros(spec)?,
            second_moment: MlpParams::zeros(spec)?,
        })
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Self {
        self.beta1 = beta1;
        self.beta2 = beta2;
        self
    }
}

/// One Adam update. `grads` must mirror `params` in shape.
pub fn adam_step(state: &mut AdamState, params: &mut MlpParams, grads: &MlpParams) -> Result<()> {
    if params.layers.len() != grads.layers.len() {
        return Err(Error::shape("grads do not mirror params"));
    }
    state.step += 1;
    let t = state.step;
    let bc1 = 1.0 - state.beta1.powi(t as i32);
    let bc2 = 1.0 - state.beta2.powi(t as i32);
    for li in 0..params.layers.len() {
        let p = &mut params.layers[li];
        let g = &grads.layers[li];
        if p.weights.rows() != g.weights.rows() || p.weights.cols() != g.weights.cols() {
            return Err(Error::shape("grads do not mirror params"));
        }
        let m = state.first_moment.layers[li].weights.data_mut();
        let v = state.second_moment.layers[li].weights.data_mut();
        for (i, pw) in p.weights.data_mut().iter_mut().enumerate() {
            let gv = g.weights.data()[i];
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * gv;
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * gv * gv;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            *pw -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
        let mb = &mut state.first_moment.layers[li].bias;
        let vb = &mut state.second_moment.layers[li].bias;
        for (i, pb) in p.bias.iter_mut().enumerate() {
            let gv = g.bias[i];
            mb[i] = state.beta1 * mb[i] + (1.0 - state.beta1) * gv;
            vb[i] = state.beta2 * vb[i] + (1.0 - state.beta2) * gv * gv;
            let m_hat = mb[i] / bc1;
            let v_hat = vb[i] / bc2;
            *pb -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}
