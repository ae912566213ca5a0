//! AdamW with decoupled weight decay.

use serde::{Deserialize, Serialize};

use super::{Gradients, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { lr: 5e-5, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.weight_decay >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::validation(format!("invalid optimizer settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        OptimizerState { step: 0, m: vec![0.0; n], v: vec![0.0; n] }
    }
}

/// One AdamW step: decay, moment update, bias-corrected adaptive step.
pub fn apply_update(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut OptimizerState,
    cfg: &AdamWConfig,
) -> Result<()> {
    let n = params.data.len();
    if grads.data.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::Dimension(format!(
            "params {n}, grads {}, moments {}/{}",
            grads.data.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    if let Some(i) = grads.first_non_finite() {
        return Err(Error::numerical(format!(
            "non-finite gradient {} at parameter {i} (optimizer step {})",
            grads.data[i],
            state.step + 1
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let decay = 1.0 - cfg.lr * cfg.weight_decay;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    for (((p, &g), m), v) in params.data.iter_mut().zip(&grads.data).zip(&mut state.m).zip(&mut state.v) {
        *p *= decay;
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
