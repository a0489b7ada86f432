use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::line_search::{wolfe_line_search, LineSearchConfig};
use super::{all_finite, dot, inf_norm, OptimizeReport, Progress, TerminationReason};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsConfig {
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once `‖∇f‖∞` falls to this value.
    pub grad_tol: f64,
    /// Stop once `(f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|)` falls to this value.
    pub rel_reduction_tol: f64,
    pub wolfe_c1: f64,
    pub wolfe_c2: f64,
    pub max_line_search_steps: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            memory: 50,
            max_iterations: 50_000,
            grad_tol: 1e-9,
            rel_reduction_tol: 1e-14,
            wolfe_c1: 1e-4,
            wolfe_c2: 0.9,
            max_line_search_steps: 50,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.memory > 0
            && self.max_iterations > 0
            && self.grad_tol > 0.0
            && self.rel_reduction_tol >= 0.0
            && self.wolfe_c1 > 0.0
            && self.wolfe_c1 < self.wolfe_c2
            && self.wolfe_c2 < 1.0
            && self.max_line_search_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid L-BFGS configuration {self:?}"
            )))
        }
    }

    fn line_search(&self) -> LineSearchConfig {
        LineSearchConfig {
            c1: self.wolfe_c1,
            c2: self.wolfe_c2,
            max_steps: self.max_line_search_steps,
            ..LineSearchConfig::default()
        }
    }
}

/// Curvature pairs with `sᵀy` at or below this fraction of `|s||y|` are skipped.
const CURVATURE_SKIP: f64 = 1e-10;

struct Memory {
    capacity: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Memory {
    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) -> bool {
        let sy = dot(&s, &y);
        let norms = dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if !(sy > CURVATURE_SKIP * norms) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
        true
    }

    /// Two-loop recursion: returns `-H g`.
    fn direction(&self, grad: &[f64]) -> Vec<f64> {
        let mut q = grad.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        q.iter_mut().for_each(|v| *v = -*v);
        q
    }
}

pub fn lbfgs_run<F>(
    objective: F,
    theta0: &[f64],
    cfg: &LbfgsConfig,
) -> Result<(Vec<f64>, OptimizeReport)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    lbfgs_run_observed(objective, theta0, cfg, |_| {})
}

/// Limited-memory BFGS with a strong-Wolfe line search.
///
/// A failed line search first discards the curvature memory and retries along
/// the steepest-descent direction; a second consecutive failure ends the run
/// at the best point reached.
pub fn lbfgs_run_observed<F, O>(
    mut objective: F,
    theta0: &[f64],
    cfg: &LbfgsConfig,
    mut observer: O,
) -> Result<(Vec<f64>, OptimizeReport)>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    O: FnMut(&Progress),
{
    cfg.validate()?;
    let ls_cfg = cfg.line_search();
    let mut x = theta0.to_vec();
    let (mut f, mut g) = objective(&x)?;
    check(f, &g, 0)?;
    let mut history = vec![f];
    let mut memory = Memory {
        capacity: cfg.memory,
        pairs: VecDeque::new(),
    };

    let report = |iterations: usize, f: f64, g: &[f64], history: Vec<f64>, reason| OptimizeReport {
        iterations_used: iterations,
        final_loss: f,
        final_grad_norm: inf_norm(g),
        loss_history: history,
        termination_reason: reason,
    };

    if inf_norm(&g) <= cfg.grad_tol {
        return Ok((x, report(0, f, &g, history, TerminationReason::GradTol)));
    }

    let mut iteration = 0;
    while iteration < cfg.max_iterations {
        let mut d = memory.direction(&g);
        if !(dot(&g, &d) < 0.0) {
            memory.pairs.clear();
            d = g.iter().map(|v| -v).collect();
        }
        let initial = if memory.pairs.is_empty() {
            (1.0 / dot(&g, &g).sqrt()).min(1.0)
        } else {
            1.0
        };
        let ls = wolfe_line_search(&mut objective, &x, f, &g, &d, initial, &ls_cfg)?;
        if !ls.converged && !(ls.step > 0.0 && ls.value < f) {
            if memory.pairs.is_empty() {
                return Ok((
                    x,
                    report(
                        iteration,
                        f,
                        &g,
                        history,
                        TerminationReason::LineSearchFailure,
                    ),
                ));
            }
            memory.pairs.clear();
            continue;
        }

        let s: Vec<f64> = d.iter().map(|di| ls.step * di).collect();
        let x_new: Vec<f64> = x.iter().zip(&s).map(|(xi, si)| xi + si).collect();
        let y: Vec<f64> = ls.grad.iter().zip(&g).map(|(a, b)| a - b).collect();
        iteration += 1;
        check(ls.value, &ls.grad, iteration)?;
        memory.push(s, y);
        let f_prev = f;
        x = x_new;
        f = ls.value;
        g = ls.grad;
        history.push(f);
        observer(&Progress {
            iteration,
            loss: f,
            grad_norm: inf_norm(&g),
            theta: &x,
        });

        if inf_norm(&g) <= cfg.grad_tol {
            return Ok((
                x,
                report(iteration, f, &g, history, TerminationReason::GradTol),
            ));
        }
        let scale = f_prev.abs().max(f.abs()).max(f64::MIN_POSITIVE);
        if (f_prev - f) / scale <= cfg.rel_reduction_tol {
            return Ok((
                x,
                report(iteration, f, &g, history, TerminationReason::RelReduction),
            ));
        }
        if !ls.converged {
            memory.pairs.clear();
        }
    }
    Ok((
        x,
        report(iteration, f, &g, history, TerminationReason::MaxIter),
    ))
}

fn check(loss: f64, grad: &[f64], iteration: usize) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            phase: "lbfgs",
            iteration,
            what: "loss",
        });
    }
    if !all_finite(grad) {
        return Err(Error::NonFinite {
            phase: "lbfgs",
            iteration,
            what: "gradient",
        });
    }
    Ok(())
}
