//! Run configuration: a TOML file, overridden field by field by command-line
//! flags.

use crate::boost::BoostParams;
use crate::downstream::DownstreamConfig;
use crate::experiment::{ExperimentConfig, DEFAULT_FOLDS};
use crate::manifold::CovRidge;
use crate::metrics::DEFAULT_BINS;
use crate::pipeline::SmhSettings;
use crate::reconstruct::AugmentationConfig;
use crate::spectral_map::SpectralMode;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const DEFAULT_SMILES_COLUMN: &str = "smiles";
pub const DEFAULT_TARGET_COLUMN: &str = "target";
pub const DEFAULT_OUT_DIR: &str = "runs";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
}

impl ConfigError {
    /// Bad values are usage errors; unreadable files are runtime errors.
    pub fn is_usage(&self) -> bool {
        matches!(self, Self::Parse { .. } | Self::Invalid(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub smiles_col: String,
    pub target_col: String,
    pub folds: usize,
    pub bins: usize,
    /// Master seed. Copied into `augmentation.master_seed` on resolve.
    pub seed: u64,
    pub out: PathBuf,
    /// Output goes to `<out>/run_<name>/`; defaults to the dataset file
    /// stem and seed.
    pub name: Option<String>,
    pub threads: Option<usize>,
    pub augmentation: AugmentationConfig,
    /// Spectrum regressor.
    pub regressor: BoostParams,
    pub cov_ridge: CovRidge,
    pub downstream: DownstreamConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            smiles_col: DEFAULT_SMILES_COLUMN.to_string(),
            target_col: DEFAULT_TARGET_COLUMN.to_string(),
            folds: DEFAULT_FOLDS,
            bins: DEFAULT_BINS,
            seed: 0,
            out: PathBuf::from(DEFAULT_OUT_DIR),
            name: None,
            threads: None,
            augmentation: AugmentationConfig::default(),
            regressor: BoostParams::default(),
            cov_ridge: CovRidge::Auto,
            downstream: DownstreamConfig::default(),
        }
    }
}

/// Values given on the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub smiles_col: Option<String>,
    pub target_col: Option<String>,
    pub k: Option<usize>,
    pub spectral_mode: Option<SpectralMode>,
    pub gamma: Option<f64>,
    pub fraction: Option<f64>,
    pub cutoff: Option<f64>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source: Box::new(source),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                ConfigError::FileNotFound(path.to_path_buf())
            } else {
                ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        Self::from_toml(&text, path)
    }

    /// Applies `overrides`, copies the seed into the augmentation settings
    /// and checks every value. Does not touch the filesystem.
    pub fn resolve(mut self, overrides: Overrides) -> Result<Self, ConfigError> {
        let o = overrides;
        if let Some(v) = o.dataset {
            self.dataset = Some(v);
        }
        if let Some(v) = o.smiles_col {
            self.smiles_col = v;
        }
        if let Some(v) = o.target_col {
            self.target_col = v;
        }
        if let Some(v) = o.k {
            self.augmentation.k = v;
        }
        if let Some(v) = o.spectral_mode {
            self.augmentation.spectral_mode = v;
        }
        if let Some(v) = o.gamma {
            self.augmentation.gamma = v;
        }
        if let Some(v) = o.fraction {
            self.augmentation.sampling_fraction = v;
        }
        if let Some(v) = o.cutoff {
            self.augmentation.binarization_cutoff = v;
        }
        if let Some(v) = o.folds {
            self.folds = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.out {
            self.out = v;
        }
        if let Some(v) = o.threads {
            self.threads = Some(v);
        }
        self.augmentation.master_seed = self.seed;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.bins == 0 {
            return bad("bins must be at least 1".to_string());
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".to_string());
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return bad(format!("run name {name:?} must be a non-empty file name"));
            }
        }
        self.augmentation.validate().map_err(ConfigError::Invalid)?;
        self.regressor
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("regressor: {e}")))?;
        self.downstream
            .params
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("downstream: {e}")))?;
        if !(self.downstream.validation_fraction > 0.0 && self.downstream.validation_fraction < 1.0) {
            return bad(format!(
                "downstream validation_fraction {} not in (0, 1)",
                self.downstream.validation_fraction
            ));
        }
        if let CovRidge::Fixed(r) = self.cov_ridge {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("cov_ridge {r} must be non-negative"));
            }
        }
        Ok(())
    }

    /// The dataset path, checked to exist.
    pub fn dataset_path(&self) -> Result<&Path, ConfigError> {
        let path = self
            .dataset
            .as_deref()
            .ok_or_else(|| ConfigError::Invalid("no dataset given (use --dataset or `dataset = ...`)".to_string()))?;
        if !path.is_file() {
            return Err(ConfigError::FileNotFound(path.to_path_buf()));
        }
        Ok(path)
    }

    pub fn run_name(&self) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        let stem = self
            .dataset
            .as_deref()
            .and_then(Path::file_stem)
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "smh".to_string());
        format!("{stem}_s{}", self.seed)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(format!("run_{}", self.run_name()))
    }

    pub fn smh_settings(&self) -> SmhSettings {
        SmhSettings {
            augmentation: self.augmentation.clone(),
            regressor: self.regressor.clone(),
            cov_ridge: self.cov_ridge,
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            folds: self.folds,
            bins: self.bins,
            smh: self.smh_settings(),
            downstream: self.downstream.clone(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let cfg = RunConfig::from_toml(
            "dataset = \"a.csv\"\nseed = 3\nfolds = 4\n[augmentation]\ngamma = 2.0\ncutoff_unused = 1\n",
            Path::new("x.toml"),
        );
        assert!(matches!(cfg, Err(ConfigError::Parse { .. })));

        let cfg = RunConfig::from_toml(
            "dataset = \"a.csv\"\nseed = 3\nfolds = 4\n[augmentation]\ngamma = 2.0\nk = 8\n",
            Path::new("x.toml"),
        )
        .unwrap();
        let resolved = cfg
            .resolve(Overrides {
                gamma: Some(0.5),
                seed: Some(9),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(resolved.augmentation.gamma, 0.5);
        assert_eq!(resolved.augmentation.k, 8);
        assert_eq!(resolved.folds, 4);
        assert_eq!(resolved.seed, 9);
        assert_eq!(resolved.augmentation.master_seed, 9);
        assert_eq!(resolved.run_name(), "a_s9");
    }

    #[test]
    fn rejects_single_fold() {
        let err = RunConfig::default()
            .resolve(Overrides {
                folds: Some(1),
                ..Default::default()
            })
            .unwrap_err();
        assert!(err.is_usage());
        assert!(err.to_string().contains("folds"));
    }

    #[test]
    fn rejects_out_of_range_augmentation_values() {
        for o in [
            Overrides {
                cutoff: Some(1.0),
                ..Default::default()
            },
            Overrides {
                fraction: Some(0.0),
                ..Default::default()
            },
            Overrides {
                k: Some(0),
                ..Default::default()
            },
        ] {
            assert!(RunConfig::default().resolve(o).unwrap_err().is_usage());
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            dataset: Some("d.csv".into()),
            cov_ridge: CovRidge::Fixed(1e-4),
            threads: Some(2),
            ..Default::default()
        };
        let back = RunConfig::from_toml(&cfg.to_toml(), Path::new("echo.toml")).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_dataset_file() {
        let cfg = RunConfig {
            dataset: Some("/nonexistent/data.csv".into()),
            ..Default::default()
        };
        let err = cfg.dataset_path().unwrap_err();
        assert!(!err.is_usage());
        assert!(err.to_string().contains("file not found"));
    }
}
