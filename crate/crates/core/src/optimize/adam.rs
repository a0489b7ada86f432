use serde::{Deserialize, Serialize};

use super::{all_finite, inf_norm, OptimizeReport, Progress, TerminationReason};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub iterations: usize,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            iterations: 2000,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0
            && self.epsilon > 0.0
            && self.iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid Adam configuration {self:?}"
            )))
        }
    }
}

pub fn adam_run<F>(
    objective: F,
    theta0: &[f64],
    cfg: &AdamConfig,
) -> Result<(Vec<f64>, OptimizeReport)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    adam_run_observed(objective, theta0, cfg, |_| {})
}

/// Bias-corrected Adam for exactly `cfg.iterations` full-batch steps.
pub fn adam_run_observed<F, O>(
    mut objective: F,
    theta0: &[f64],
    cfg: &AdamConfig,
    mut observer: O,
) -> Result<(Vec<f64>, OptimizeReport)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(&Progress),
{
    cfg.validate()?;
    let mut theta = theta0.to_vec();
    let (mut loss, mut grad) = objective(&theta)?;
    check(loss, &grad, 0)?;
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    history.push(loss);

    let mut m = vec![0.0; theta.len()];
    let mut v = vec![0.0; theta.len()];
    let mut b1t = 1.0;
    let mut b2t = 1.0;
    for t in 1..=cfg.iterations {
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        let c1 = 1.0 - b1t;
        let c2 = 1.0 - b2t;
        for i in 0..theta.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
        (loss, grad) = objective(&theta)?;
        check(loss, &grad, t)?;
        history.push(loss);
        observer(&Progress {
            iteration: t,
            loss,
            grad_norm: inf_norm(&grad),
            theta: &theta,
        });
    }

    let report = OptimizeReport {
        iterations_used: cfg.iterations,
        final_loss: loss,
        final_grad_norm: inf_norm(&grad),
        loss_history: history,
        termination_reason: TerminationReason::MaxIter,
    };
    Ok((theta, report))
}

fn check(loss: f64, grad: &[f64], iteration: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            phase: "adam",
            iteration,
            what: "loss",
        });
    }
    if !all_finite(grad) {
        return Err(Error::NonFinite {
            phase: "adam",
            iteration,
            what: "gradient",
        });
    }
    Ok(())
}
