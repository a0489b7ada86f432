use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::train::{emit_artifacts, train, RunStatus};
use crate::error::{Error, Result};
use crate::geometry::csv_error;
use crate::loss::Method;
use crate::problems::builtin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepStatus {
    Ok,
    /// Separated subdomains overlap at this distance; nothing was trained.
    Invalid,
    /// Every repeat failed.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: f64,
    pub mean_rel_l2: Option<f64>,
    /// Sample standard deviation over successful runs (0 for a single run).
    pub std_rel_l2: Option<f64>,
    pub n_runs: usize,
    pub status: SweepStatus,
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> Option<(f64, f64)> {
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

/// Trains `repeats` runs (seeds `base.seed + i`) for every distance in `d_list`.
///
/// With `out_dir`, each run's artifacts go to `d_<d>/run_<i>/`. Failed runs are
/// logged and left out of the statistics.
pub fn sweep_d(
    base: &TrainConfig,
    d_list: &[f64],
    repeats: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be positive".into()));
    }
    if base.method == Method::Std {
        log::warn!("the standard method ignores the separation distance");
    }
    let spec = builtin(base.problem);
    let mut rows = Vec::with_capacity(d_list.len());
    for &d in d_list {
        if base.method != Method::Std {
            if let Err(e) = spec.separated_domain(d) {
                log::warn!("d = {d}: {e}");
                rows.push(SweepRow {
                    d,
                    mean_rel_l2: None,
                    std_rel_l2: None,
                    n_runs: 0,
                    status: SweepStatus::Invalid,
                });
                continue;
            }
        }
        let mut errors = Vec::with_capacity(repeats);
        for i in 0..repeats {
            let mut cfg = base.clone();
            cfg.d = Some(d);
            cfg.seed = base.seed + i as u64;
            match train(&cfg) {
                Ok(outcome) => {
                    if let Some(dir) = out_dir {
                        emit_artifacts(
                            &outcome.metrics,
                            outcome.evaluation.as_ref(),
                            &dir.join(format!("d_{d}")).join(format!("run_{i}")),
                        )?;
                    }
                    match (outcome.metrics.status, outcome.metrics.rel_l2) {
                        (RunStatus::Completed, Some(r)) => {
                            log::info!("d = {d}, run {i}: relative L2 {r:.4e}");
                            errors.push(r);
                        }
                        _ => log::warn!("d = {d}, run {i} failed: {:?}", outcome.metrics.error),
                    }
                }
                Err(e) => log::warn!("d = {d}, run {i} failed: {e}"),
            }
        }
        let stats = mean_std(&errors);
        rows.push(SweepRow {
            d,
            mean_rel_l2: stats.map(|s| s.0),
            std_rel_l2: stats.map(|s| s.1),
            n_runs: errors.len(),
            status: if errors.is_empty() {
                SweepStatus::Failed
            } else {
                SweepStatus::Ok
            },
        });
    }
    Ok(rows)
}

/// `sweep.csv` with columns `d,mean_rel_l2,std_rel_l2,n_runs,status`.
pub fn write_sweep_csv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
