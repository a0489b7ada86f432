use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dspinn::harness::{
    emit_artifacts, evaluate_checkpoint, sweep_d, train, write_sweep_csv, Checkpoint, Profile,
    RunStatus, SweepStatus, TrainConfig,
};
use dspinn::loss::Method;
use dspinn::net::Precision;
use dspinn::problems::ProblemName;
use dspinn::{Error, Result};

/// Domain-separation PINN solver for multi-material diffusion benchmarks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network and write checkpoint, metrics and prediction grid.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Separation distance (problem default if omitted; ignored by std).
        #[arg(long)]
        d: Option<f64>,
        /// Also write the sampled training points as training_set.csv.
        #[arg(long)]
        export_training_set: bool,
    },
    /// Evaluate a checkpoint on the test grid.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train repeatedly over a list of separation distances.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated distances, e.g. 0.001,0.1,50
        #[arg(long, value_delimiter = ',', required = true)]
        d_list: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
}

/// Options shared by `train` and `sweep`. Explicit flags take precedence over
/// the config file, which takes precedence over the profile defaults.
#[derive(Args)]
struct RunArgs {
    /// ex1, ex3, ex4, ex5 or smooth_sanity
    #[arg(long)]
    problem: Option<String>,
    /// std, ds or nds
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// full or ci
    #[arg(long, default_value = "full")]
    profile: String,
    /// TOML file with any subset of the training configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    adam_iterations: Option<usize>,
    #[arg(long)]
    lbfgs_iterations: Option<usize>,
    /// Kernel precision for training: f64 or f32.
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<TrainConfig> {
        let profile: Profile = self.profile.parse()?;
        let mut cfg = match &self.config {
            Some(path) => TrainConfig::load(path, profile)?,
            None => {
                let need = |v: &Option<String>, what: &str| {
                    v.clone().ok_or_else(|| {
                        Error::Usage(format!("--{what} is required without --config"))
                    })
                };
                let problem: ProblemName = need(&self.problem, "problem")?.parse()?;
                let method: Method = need(&self.method, "method")?.parse()?;
                TrainConfig::new(problem, method, profile)
            }
        };
        if let Some(p) = &self.problem {
            cfg.problem = p.parse()?;
        }
        if let Some(m) = &self.method {
            cfg.method = m.parse()?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.adam_iterations {
            cfg.adam.iterations = n;
        }
        if let Some(n) = self.lbfgs_iterations {
            cfg.lbfgs.max_iterations = n;
        }
        if let Some(p) = &self.precision {
            cfg.precision = match p.as_str() {
                "f64" => Precision::F64,
                "f32" => Precision::F32,
                other => return Err(Error::Config(format!("unknown precision '{other}'"))),
            };
        }
        cfg.out = Some(self.out.clone());
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train {
            run,
            d,
            export_training_set,
        } => {
            let mut cfg = run.config()?;
            if d.is_some() {
                cfg.d = d;
            }
            let out = run.out.clone();
            let outcome = train(&cfg)?;
            create_dir(&out)?;
            emit_artifacts(&outcome.metrics, outcome.evaluation.as_ref(), &out)?;
            outcome.checkpoint().save(&out.join("checkpoint.json"))?;
            if export_training_set {
                outcome
                    .training_set
                    .write_csv(&out.join("training_set.csv"))?;
            }
            match outcome.metrics.rel_l2 {
                Some(r) => println!("relative L2 error: {r:.6e}"),
                None => println!("relative L2 error: unavailable"),
            }
            Ok(outcome.metrics.status == RunStatus::Completed)
        }
        Command::Eval { checkpoint, out } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let (metrics, evaluation) = evaluate_checkpoint(&ck)?;
            emit_artifacts(&metrics, Some(&evaluation), &out)?;
            println!("relative L2 error: {:.6e}", evaluation.rel_l2);
            Ok(true)
        }
        Command::Sweep {
            run,
            d_list,
            repeats,
        } => {
            let cfg = run.config()?;
            create_dir(&run.out)?;
            let rows = sweep_d(&cfg, &d_list, repeats, Some(&run.out))?;
            write_sweep_csv(&rows, &run.out.join("sweep.csv"))?;
            for r in &rows {
                match (r.status, r.mean_rel_l2) {
                    (SweepStatus::Ok, Some(m)) => println!(
                        "d = {:<10} mean {:.4e}  std {:.4e}  runs {}",
                        r.d,
                        m,
                        r.std_rel_l2.unwrap_or(0.0),
                        r.n_runs
                    ),
                    (status, _) => println!("d = {:<10} {:?}", r.d, status),
                }
            }
            Ok(rows.iter().all(|r| r.status != SweepStatus::Failed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
