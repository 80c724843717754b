//! Learnable parameter blocks and the Adam update rule.

use crate::error::{AdrnetError, Result};
use crate::neural::matrix::Matrix;

/// A learnable parameter with its gradient buffer and Adam moment estimates.
///
/// `value`, `grad`, `m` and `v` always share one shape. Gradients accumulate
/// with `+=` across a batch (and across paths that share the block) and are
/// reset to zero by `adam_step`.
#[derive(Debug, Clone)]
pub struct ParamBlock {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
    pub m: Matrix,
    pub v: Matrix,
    pub step_count: u64,
}

impl ParamBlock {
    pub fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        ParamBlock {
            name: name.to_string(),
            value: Matrix::zeros(rows, cols),
            grad: Matrix::zeros(rows, cols),
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            step_count: 0,
        }
    }

    pub fn from_value(name: &str, value: Matrix) -> Self {
        let (rows, cols) = value.shape();
        ParamBlock {
            name: name.to_string(),
            value,
            grad: Matrix::zeros(rows, cols),
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            step_count: 0,
        }
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// Adam hyperparameters. Weight decay is coupled L2: it is folded into the
/// gradient before the moment update and applies to every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(AdrnetError::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) || !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(AdrnetError::Config(format!(
                "betas must lie in (0,1), got beta1={} beta2={}",
                self.beta1, self.beta2
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(AdrnetError::Config(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(AdrnetError::Config(format!(
                "weight_decay must be nonnegative, got {}",
                self.weight_decay
            )));
        }
        Ok(())
    }
}

/// One Adam step with bias correction.
///
/// Applies `grad += weight_decay * value` first, updates the moment
/// estimates, moves `value`, then resets `grad` to zero. Errors on a
/// non-finite gradient, leaving the parameter untouched.
pub fn adam_step(param: &mut ParamBlock, cfg: &AdamConfig) -> Result<()> {
    if !param.grad.all_finite() {
        return Err(AdrnetError::Numeric(format!(
            "non-finite gradient in parameter '{}'",
            param.name
        )));
    }
    param.step_count += 1;
    let t = param.step_count as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);

    let n = param.value.len();
    for idx in 0..n {
        let g = param.grad.values()[idx] + cfg.weight_decay * param.value.values()[idx];
        let m = cfg.beta1 * param.m.values()[idx] + (1.0 - cfg.beta1) * g;
        let v = cfg.beta2 * param.v.values()[idx] + (1.0 - cfg.beta2) * g * g;
        param.m.values_mut()[idx] = m;
        param.v.values_mut()[idx] = v;
        let m_hat = m / bias1;
        let v_hat = v / bias2;
        param.value.values_mut()[idx] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    param.zero_grad();
    Ok(())
}
