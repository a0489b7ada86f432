use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::eval::{evaluate, write_error_heatmap, write_prediction_csv, Evaluation, GRID_SIDE};
use crate::error::{Error, Result};
use crate::geometry::{Domain, TrainingSet};
use crate::loss::{compute_normalizers, LossBreakdown, LossContext, Method, NetField, Normalizers};
use crate::net::{xavier_init, NetworkParams, Precision};
use crate::optimize::{adam_run_observed, lbfgs_run_observed, Progress, TerminationReason};
use crate::problems::{builtin, ProblemSpec};

pub const VERSION: &str = concat!("dspinn ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Completed,
    /// The optimizer hit a non-finite loss; results describe the last finite iterate.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Adam,
    Lbfgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub phase: Phase,
    pub iteration: usize,
    pub l_b: f64,
    pub l_r: f64,
    pub l_gamma: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub iterations: usize,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub termination_reason: TerminationReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRange {
    pub min_abs_err: f64,
    pub max_abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    /// Separation distance used (absent for the standard method).
    pub d: Option<f64>,
    /// Relative L2 error on the 100×100 test grid.
    pub rel_l2: Option<f64>,
    pub final_loss: Option<LossBreakdown>,
    pub normalizers: Normalizers,
    pub adam: Option<PhaseSummary>,
    pub lbfgs: Option<PhaseSummary>,
    /// Total loss at the start and after every accepted iterate, Adam then L-BFGS.
    pub loss_history: Vec<f64>,
    pub loss_log: Vec<LogEntry>,
    /// Colour scale of the error heatmap.
    pub heatmap: Option<ErrorRange>,
    pub n_params: usize,
    pub n_boundary: usize,
    pub n_residual: usize,
    pub n_interface: usize,
    pub config: TrainConfig,
    pub wall_clock_seconds: f64,
}

/// Trained parameters together with the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub config: TrainConfig,
    pub d: Option<f64>,
    pub layer_sizes: Vec<usize>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn network(&self) -> Result<NetworkParams> {
        NetworkParams::unflatten(&self.params, &self.layer_sizes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub struct TrainOutcome {
    pub params: NetworkParams,
    pub metrics: Metrics,
    /// Absent when the final parameters could not be evaluated.
    pub evaluation: Option<Evaluation>,
    pub domain: Domain,
    pub training_set: TrainingSet,
}

impl TrainOutcome {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            version: VERSION.to_string(),
            config: self.metrics.config.clone(),
            d: self.metrics.d,
            layer_sizes: self.params.layer_sizes.clone(),
            params: self.params.flatten(),
        }
    }
}

/// Geometry the method trains on, with the separation distance actually used.
pub fn training_domain(
    spec: &ProblemSpec,
    method: Method,
    d: Option<f64>,
) -> Result<(Domain, Option<f64>)> {
    match method {
        Method::Std => Ok((spec.domain.clone(), None)),
        Method::Ds | Method::Nds => {
            let d = d.unwrap_or(spec.default_d);
            Ok((spec.separated_domain(d)?, Some(d)))
        }
    }
}

fn log_entry(phase: Phase, iteration: usize, b: &LossBreakdown) -> LogEntry {
    LogEntry {
        phase,
        iteration,
        l_b: b.l_b,
        l_r: b.l_r,
        l_gamma: b.l_gamma,
        total: b.total,
    }
}

/// Samples the training set, runs Adam then L-BFGS and evaluates the result.
///
/// Configuration problems are returned as errors. A non-finite loss during
/// optimization ends the run with [`RunStatus::Failed`] and metrics for the
/// last finite iterate.
pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let spec = builtin(cfg.problem);
    let (domain, d) = training_domain(&spec, cfg.method, cfg.d)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let set = TrainingSet::sample(
        &domain,
        cfg.method.set_kind(),
        &cfg.samples,
        &mut rng,
        |x| spec.dirichlet(x),
    )?;
    let normalizers = compute_normalizers(&set, &spec)?;
    let ctx = LossContext::new(cfg.method, &set, &spec, cfg.weights, normalizers)?;
    let params0 = xavier_init(&cfg.layer_sizes, cfg.seed)?;
    let sizes = params0.layer_sizes.clone();
    log::info!(
        "{} {} d={:?}: {} boundary, {} residual, {} interface records, {} parameters",
        cfg.problem,
        cfg.method,
        d,
        ctx.num_boundary(),
        ctx.num_residual(),
        ctx.num_interface(),
        params0.parameter_count()
    );

    let breakdown = |theta: &[f64]| -> Result<LossBreakdown> {
        let p = NetworkParams::unflatten(theta, &sizes)?;
        ctx.evaluate(&NetField::<f64>::new(&p))
    };
    let objective = |theta: &[f64]| -> Result<(f64, Vec<f64>)> {
        let p = NetworkParams::unflatten(theta, &sizes)?;
        let result = match cfg.precision {
            Precision::F64 => ctx.loss_and_grad::<f64>(&p),
            Precision::F32 => ctx.loss_and_grad::<f32>(&p),
        };
        match result {
            Ok((b, g)) => Ok((b.total, g)),
            // reported as a non-finite loss so line searches can back off
            Err(e @ Error::NonFiniteRecord { .. }) => {
                log::debug!("{e}");
                Ok((f64::INFINITY, vec![f64::NAN; p.parameter_count()]))
            }
            Err(e) => Err(e),
        }
    };

    let mut theta = params0.flatten();
    let start = breakdown(&theta)?;
    let mut history = vec![start.total];
    let mut loss_log = vec![log_entry(Phase::Adam, 0, &start)];
    let mut failure: Option<Error> = None;

    let observe = |phase: Phase,
                   p: &Progress,
                   history: &mut Vec<f64>,
                   log: &mut Vec<LogEntry>,
                   last: &mut Vec<f64>| {
        history.push(p.loss);
        last.clear();
        last.extend_from_slice(p.theta);
        if p.iteration.is_multiple_of(cfg.log_every) {
            if let Ok(b) = breakdown(p.theta) {
                log::info!(
                    "{phase:?} {:>6}: total {:.4e}  L_b {:.3e}  L_r {:.3e}  L_gamma {:.3e}  |g| {:.2e}",
                    p.iteration,
                    b.total,
                    b.l_b,
                    b.l_r,
                    b.l_gamma,
                    p.grad_norm
                );
                log.push(log_entry(phase, p.iteration, &b));
            }
        }
    };

    let mut last = theta.clone();
    let adam = match adam_run_observed(objective, &theta, &cfg.adam, |p| {
        observe(Phase::Adam, p, &mut history, &mut loss_log, &mut last)
    }) {
        Ok((t, report)) => {
            theta = t;
            Some(PhaseSummary {
                iterations: report.iterations_used,
                final_loss: report.final_loss,
                final_grad_norm: report.final_grad_norm,
                termination_reason: report.termination_reason,
            })
        }
        Err(e @ Error::NonFinite { .. }) => {
            failure = Some(e);
            theta = last.clone();
            None
        }
        Err(e) => return Err(e),
    };

    let mut lbfgs = None;
    if failure.is_none() {
        match lbfgs_run_observed(objective, &theta, &cfg.lbfgs, |p| {
            observe(Phase::Lbfgs, p, &mut history, &mut loss_log, &mut last)
        }) {
            Ok((t, report)) => {
                theta = t;
                log::info!(
                    "L-BFGS stopped after {} iterations: {:?}",
                    report.iterations_used,
                    report.termination_reason
                );
                lbfgs = Some(PhaseSummary {
                    iterations: report.iterations_used,
                    final_loss: report.final_loss,
                    final_grad_norm: report.final_grad_norm,
                    termination_reason: report.termination_reason,
                });
            }
            Err(e @ Error::NonFinite { .. }) => {
                failure = Some(e);
                theta = last.clone();
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(e) = &failure {
        log::error!("training diverged: {e}");
    }

    let params = NetworkParams::unflatten(&theta, &sizes)?;
    let final_loss = breakdown(&theta).ok();
    if let Some(b) = &final_loss {
        let phase = if lbfgs.is_some() {
            Phase::Lbfgs
        } else {
            Phase::Adam
        };
        let iteration = lbfgs.map_or(adam.map_or(0, |a| a.iterations), |l| l.iterations);
        if loss_log.last().map(|e| (e.phase, e.iteration)) != Some((phase, iteration)) {
            loss_log.push(log_entry(phase, iteration, b));
        }
    }
    let evaluation = evaluate(&NetField::<f64>::new(&params), &spec, &domain).ok();
    let rel_l2 = evaluation
        .as_ref()
        .map(|e| e.rel_l2)
        .filter(|v| v.is_finite());
    if let Some(r) = rel_l2 {
        log::info!("relative L2 error {r:.4e}");
    }
    let metrics = Metrics {
        version: VERSION.to_string(),
        status: if failure.is_some() {
            RunStatus::Failed
        } else {
            RunStatus::Completed
        },
        error: failure.map(|e| e.to_string()),
        d,
        rel_l2,
        final_loss,
        normalizers,
        adam,
        lbfgs,
        loss_history: history,
        loss_log,
        heatmap: evaluation.as_ref().map(error_range),
        n_params: params.parameter_count(),
        n_boundary: set.tau_b.len(),
        n_residual: set.tau_r.len(),
        n_interface: set.tau_gamma.len(),
        config: cfg.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok(TrainOutcome {
        params,
        metrics,
        evaluation,
        domain,
        training_set: set,
    })
}

fn error_range(e: &Evaluation) -> ErrorRange {
    let (min_abs_err, max_abs_err) = e.abs_err_range();
    ErrorRange {
        min_abs_err,
        max_abs_err,
    }
}

/// Re-evaluates a checkpoint on the test grid.
pub fn evaluate_checkpoint(ck: &Checkpoint) -> Result<(Metrics, Evaluation)> {
    let started = Instant::now();
    let params = ck.network()?;
    let spec = builtin(ck.config.problem);
    let (domain, d) = training_domain(&spec, ck.config.method, ck.d.or(ck.config.d))?;
    let evaluation = evaluate(&NetField::<f64>::new(&params), &spec, &domain)?;
    let metrics = Metrics {
        version: VERSION.to_string(),
        status: RunStatus::Completed,
        error: None,
        d,
        rel_l2: Some(evaluation.rel_l2),
        final_loss: None,
        normalizers: Normalizers::default(),
        adam: None,
        lbfgs: None,
        loss_history: Vec::new(),
        loss_log: Vec::new(),
        heatmap: Some(error_range(&evaluation)),
        n_params: params.parameter_count(),
        n_boundary: 0,
        n_residual: 0,
        n_interface: 0,
        config: ck.config.clone(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    Ok((metrics, evaluation))
}

/// Writes `metrics.json`, and when an evaluation is given `prediction.csv`
/// and `error_heatmap.ppm`, into `out_dir`.
pub fn emit_artifacts(
    metrics: &Metrics,
    evaluation: Option<&Evaluation>,
    out_dir: &Path,
) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_json(metrics, &out_dir.join("metrics.json"))?;
    if let Some(ev) = evaluation {
        write_prediction_csv(&ev.grid, &out_dir.join("prediction.csv"))?;
        let range = metrics
            .heatmap
            .map(|r| (r.min_abs_err, r.max_abs_err))
            .unwrap_or_else(|| ev.abs_err_range());
        write_error_heatmap(
            &ev.grid,
            GRID_SIDE,
            range,
            &out_dir.join("error_heatmap.ppm"),
        )?;
    }
    Ok(())
}
