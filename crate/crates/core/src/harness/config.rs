//! Experiment configuration (TOML).
//!
//! ```toml
//! measurement_ratios = [0.1, 0.25, 0.5]
//! snr_list_db = [10.0, 20.0, inf]   # inf: noiseless, ε = 0
//! repetitions = 10
//! pmf_variants = ["kappa_sq", "uniform"]
//! kappa_variant = "eq8"
//! epsilon_trials = 100
//! epsilon_percentile = 0.95
//! output_dir = "out"
//!
//! [dims]
//! n_xi = 64
//! n_p_bar = 16
//!
//! [seeds]
//! phantom = 1
//! experiment = 2
//!
//! [solver]
//! max_iterations = 5000
//!
//! [phantom]
//! count = 3
//! ```
//!
//! Unknown keys are rejected at every level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coherence::{KappaVariant, PmfVariant};
use crate::error::{Error, Result};
use crate::phantom::PhantomParams;
use crate::recovery::SolverConfig;
use crate::transforms::Dims;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub phantom: u64,
    pub experiment: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            phantom: 1,
            experiment: 2,
        }
    }
}

fn default_repetitions() -> usize {
    10
}
fn default_pmfs() -> Vec<PmfVariant> {
    vec![PmfVariant::KappaSq]
}
fn default_epsilon_trials() -> usize {
    100
}
fn default_percentile() -> f64 {
    0.95
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dims: Dims,
    pub measurement_ratios: Vec<f64>,
    pub snr_list_db: Vec<f64>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_pmfs")]
    pub pmf_variants: Vec<PmfVariant>,
    #[serde(default)]
    pub kappa_variant: KappaVariant,
    #[serde(default = "default_epsilon_trials")]
    pub epsilon_trials: usize,
    #[serde(default = "default_percentile")]
    pub epsilon_percentile: f64,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub phantom: PhantomParams,
    /// 1-based wavenumber indices rendered as images; empty selects the
    /// phantom's spectral peaks.
    #[serde(default)]
    pub image_bands: Vec<usize>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.measurement_ratios.is_empty() || self.snr_list_db.is_empty() || self.pmf_variants.is_empty() {
            return bad("measurement_ratios, snr_list_db and pmf_variants must be non-empty".into());
        }
        if let Some(r) = self.measurement_ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return bad(format!("measurement ratio {r} not in (0, 1]"));
        }
        if let Some(s) = self.snr_list_db.iter().find(|s| s.is_nan() || **s == f64::NEG_INFINITY) {
            return bad(format!("snr {s} dB"));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.epsilon_trials < 10 {
            return bad("epsilon_trials must be at least 10".into());
        }
        if !(self.epsilon_percentile > 0.0 && self.epsilon_percentile < 1.0) {
            return bad(format!("epsilon_percentile {} not in (0, 1)", self.epsilon_percentile));
        }
        if let Some(b) = self.image_bands.iter().find(|&&b| b == 0 || b > self.dims.n_xi()) {
            return bad(format!("image band {b} outside 1..={}", self.dims.n_xi()));
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Named presets: `smoke` (16, 4), `default` (64, 16) and `large`
    /// (512, 64). The large preset is long-running: each solve works on
    /// two million unknowns.
    pub fn preset(name: &str) -> Result<Self> {
        let ratios: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let base = |dims: Dims| ExperimentConfig {
            dims,
            measurement_ratios: ratios.clone(),
            snr_list_db: vec![10.0, 15.0, 20.0],
            repetitions: default_repetitions(),
            pmf_variants: default_pmfs(),
            kappa_variant: KappaVariant::default(),
            epsilon_trials: default_epsilon_trials(),
            epsilon_percentile: default_percentile(),
            seeds: Seeds::default(),
            solver: SolverConfig::default(),
            phantom: PhantomParams::default(),
            image_bands: Vec::new(),
            output_dir: default_output(),
        };
        match name {
            "smoke" => Ok(ExperimentConfig {
                measurement_ratios: vec![0.25, 0.5, 1.0],
                snr_list_db: vec![20.0],
                repetitions: 2,
                epsilon_trials: 20,
                ..base(Dims::new(16, 4)?)
            }),
            "default" => Ok(base(Dims::new(64, 16)?)),
            "large" => Ok(base(Dims::new(512, 64)?)),
            _ => Err(Error::Config(format!(
                "unknown preset {name:?} (expected smoke, default or large)"
            ))),
        }
    }
}
