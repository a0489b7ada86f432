//! Training driver, evaluation on the test grid, separation sweeps and
//! artifact output.

mod config;
mod eval;
mod sweep;
mod train;

pub use config::{Profile, TrainConfig};
pub use eval::{
    evaluate, relative_l2, test_grid, write_error_heatmap, write_prediction_csv, Evaluation,
    GridRow, GRID_SIDE,
};
pub use sweep::{mean_std, sweep_d, write_sweep_csv, SweepRow, SweepStatus};
pub use train::{
    emit_artifacts, evaluate_checkpoint, train, training_domain, Checkpoint, ErrorRange, LogEntry,
    Metrics, Phase, PhaseSummary, RunStatus, TrainOutcome, VERSION,
};
