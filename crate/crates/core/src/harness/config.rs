use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SampleCounts;
use crate::loss::{LossWeights, Method};
use crate::net::{validate_layer_sizes, Precision};
use crate::optimize::{AdamConfig, LbfgsConfig};
use crate::problems::ProblemName;

/// Preset sample counts and iteration budgets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 5000 residual points per subdomain, 500 per boundary piece, 2000 per interface.
    #[default]
    Full,
    /// Reduced residual set and a capped L-BFGS run for quick checks.
    Ci,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Profile::Full),
            "ci" => Ok(Profile::Ci),
            _ => Err(Error::Config(format!("unknown profile '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub problem: ProblemName,
    pub method: Method,
    /// Separation distance; `None` uses the problem's default. Ignored by `std`.
    pub d: Option<f64>,
    pub layer_sizes: Vec<usize>,
    pub seed: u64,
    pub adam: AdamConfig,
    pub lbfgs: LbfgsConfig,
    pub samples: SampleCounts,
    pub weights: LossWeights,
    pub precision: Precision,
    /// Iterations between logged loss breakdowns.
    pub log_every: usize,
    pub out: Option<PathBuf>,
}

impl TrainConfig {
    pub fn new(problem: ProblemName, method: Method, profile: Profile) -> Self {
        let mut cfg = TrainConfig {
            problem,
            method,
            d: None,
            layer_sizes: vec![2, 50, 50, 50, 50, 50, 1],
            seed: 0,
            adam: AdamConfig::default(),
            lbfgs: LbfgsConfig::default(),
            samples: SampleCounts {
                n_f: 5000,
                n_b: 500,
                n_gamma: 2000,
            },
            weights: LossWeights::default(),
            precision: Precision::F64,
            log_every: 100,
            out: None,
        };
        if profile == Profile::Ci {
            cfg.samples.n_f = 2000;
            cfg.lbfgs.max_iterations = 5000;
        }
        cfg
    }

    /// Profile defaults overlaid with a TOML file's (possibly partial) tables.
    pub fn from_toml(text: &str, path: &Path, profile: Profile) -> Result<Self> {
        let format_err = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let overlay: toml::Table = toml::from_str(text).map_err(|e| format_err(e.to_string()))?;
        let problem = overlay
            .get("problem")
            .and_then(|v| v.as_str())
            .ok_or_else(|| format_err("missing 'problem'".into()))?
            .parse()?;
        let method = overlay
            .get("method")
            .and_then(|v| v.as_str())
            .ok_or_else(|| format_err("missing 'method'".into()))?
            .parse()?;
        let base = TrainConfig::new(problem, method, profile);
        let mut merged = toml::Table::try_from(&base).map_err(|e| format_err(e.to_string()))?;
        merge(&mut merged, overlay);
        let cfg: TrainConfig = merged
            .try_into()
            .map_err(|e: toml::de::Error| format_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path, profile: Profile) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path, profile)
    }

    pub fn validate(&self) -> Result<()> {
        validate_layer_sizes(&self.layer_sizes)?;
        if self.layer_sizes[0] != 2 {
            return Err(Error::Config(format!(
                "problems are two-dimensional, input width is {}",
                self.layer_sizes[0]
            )));
        }
        self.samples.validate()?;
        self.weights.validate()?;
        self.adam.validate()?;
        self.lbfgs.validate()?;
        if self.log_every == 0 {
            return Err(Error::Config("log_every must be positive".into()));
        }
        if let Some(d) = self.d {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!(
                    "separation distance must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
