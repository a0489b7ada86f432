//! First- and quasi-second-order optimizers over flat parameter vectors.
//!
//! Training runs [`adam_run`] for a fixed number of steps, then hands the
//! iterate to [`lbfgs_run`] which stops on a gradient threshold, a negligible
//! relative loss reduction, the iteration cap, or a failed line search.

mod adam;
mod lbfgs;
mod line_search;

use serde::{Deserialize, Serialize};

pub use adam::{adam_run, adam_run_observed, AdamConfig};
pub use lbfgs::{lbfgs_run, lbfgs_run_observed, LbfgsConfig};
pub use line_search::{wolfe_line_search, LineSearchConfig, LineSearchOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    GradTol,
    RelReduction,
    MaxIter,
    LineSearchFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub iterations_used: usize,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    /// Loss at the starting point followed by the loss after every iteration.
    pub loss_history: Vec<f64>,
    pub termination_reason: TerminationReason,
}

/// Snapshot handed to observers after each accepted iterate.
#[derive(Debug)]
pub struct Progress<'a> {
    pub iteration: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub theta: &'a [f64],
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}
