use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ruepi::copula::DEFAULT_RIDGE;
use ruepi::dataio::{PreprocessConfig, SyntheticSpec};
use ruepi::interval::PiMethod;
use ruepi::neural::{ModelConfig, TrainConfig};
use ruepi::{Error, Result};

/// Where raw series come from: a CSV export or the synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        channels: Vec<String>,
    },
    /// The spec's seed field is overridden by the run seed.
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowConfig {
    pub w: usize,
    pub h: usize,
    pub target_channels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: DataSource,
    #[serde(default)]
    pub preprocess: Option<PreprocessConfig>,
    pub window: WindowConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "PiMethod::all_vec")]
    pub methods: Vec<PiMethod>,
    #[serde(default)]
    pub knn_k: Option<usize>,
    #[serde(default = "default_ridge")]
    pub copula_ridge: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Split fractions for CSV sources (synthetic owns its own split).
    #[serde(default = "default_fractions")]
    pub split_fractions: (f64, f64, f64),
}

fn default_alpha() -> f64 {
    0.05
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs")
}

fn default_fractions() -> (f64, f64, f64) {
    (0.7, 0.1, 0.2)
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub methods: Option<Vec<PiMethod>>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Config(format!("invalid config '{}': {e}", path.display())))?;
        if let Some(seed) = overrides.seed {
            cfg.seeds = vec![seed];
        }
        if let Some(alpha) = overrides.alpha {
            cfg.alpha = alpha;
        }
        if let Some(methods) = &overrides.methods {
            cfg.methods = methods.clone();
        }
        if let Some(k) = overrides.k {
            cfg.knn_k = Some(k);
        }
        if let Some(out) = &overrides.out {
            cfg.out_dir = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        if self.window.w == 0 || self.window.h == 0 {
            return Err(Error::Config("window sizes W and H must be >= 1".into()));
        }
        if self.window.target_channels.is_empty() {
            return Err(Error::Config("target_channels must be nonempty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        let available: Vec<&String> = match &self.source {
            DataSource::Csv { channels, .. } => channels.iter().collect(),
            DataSource::Synthetic(_) => return Ok(()), // channels are c0..c{n-1}
        };
        for target in &self.window.target_channels {
            // Resampling renames channels, so only check without resampling.
            let resampled = self
                .preprocess
                .as_ref()
                .map(|p| p.resample_period.is_some())
                .unwrap_or(false);
            if !resampled && !available.contains(&target) {
                return Err(Error::Config(format!(
                    "target channel '{target}' is not in the source schema"
                )));
            }
        }
        Ok(())
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out_dir.join(format!("seed_{seed}"))
    }
}
