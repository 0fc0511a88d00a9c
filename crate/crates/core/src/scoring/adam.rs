//! Adam with bias correction and decoupled weight decay.

use crate::model_io::Config;
use crate::scoring::gcn::{GcnGradients, GcnModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl AdamParams {
    pub fn from_config(config: &Config) -> Self {
        Self {
            learning_rate: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.adam_epsilon,
            weight_decay: config.weight_decay,
        }
    }
}

/// First and second moment estimates over the flattened parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(num_parameters: usize) -> Self {
        Self { step: 0, m: vec![0.0; num_parameters], v: vec![0.0; num_parameters] }
    }

    pub fn for_model(model: &GcnModel) -> Self {
        Self::new(model.num_parameters())
    }
}

/// One in-place update of `params` given `grads`.
pub fn adam_update(params: &mut [f64], grads: &[f64], state: &mut AdamState, hp: &AdamParams) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - hp.beta1.powi(t);
    let c2 = 1.0 - hp.beta2.powi(t);
    for k in 0..params.len() {
        let g = grads[k];
        state.m[k] = hp.beta1 * state.m[k] + (1.0 - hp.beta1) * g;
        state.v[k] = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * g * g;
        let m_hat = state.m[k] / c1;
        let v_hat = state.v[k] / c2;
        params[k] -= hp.learning_rate * (m_hat / (v_hat.sqrt() + hp.epsilon) + hp.weight_decay * params[k]);
    }
}

/// Applies one Adam step to the model.
pub fn adam_step(model: &mut GcnModel, grads: &GcnGradients, state: &mut AdamState, config: &Config) {
    let mut params = model.flatten();
    adam_update(&mut params, &grads.flatten(), state, &AdamParams::from_config(config));
    model.set_flat(&params);
}
