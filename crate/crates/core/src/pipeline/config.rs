use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::phantom::{generate_phantom, PhantomSpec};
use crate::bpfa::BpfaConfig;
use crate::domain::{RngSeed, Strategy, Volume};
use crate::error::{Error, Result};
use crate::metrics::SsimParams;

/// Ground truth for a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Synthetic phantom generated from `seed`.
    Phantom {
        #[serde(flatten)]
        spec: PhantomSpec,
        #[serde(default)]
        seed: u64,
    },
    /// Slice stack on disk.
    Stack(PathBuf),
}

impl Source {
    pub fn load(&self) -> Result<Volume> {
        match self {
            Source::Phantom { spec, seed } => generate_phantom(spec, RngSeed(*seed)),
            Source::Stack(path) => crate::io::read_volume(path),
        }
    }
}

/// Sweep description, usually read from JSON. Missing fields take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: Source,
    pub strategies: Vec<Strategy>,
    pub sampling_ratios: Vec<f64>,
    pub rho: f64,
    pub seeds: Vec<u64>,
    pub noise_sigma: f64,
    /// Start each layer's dictionary from the previous layer's.
    pub warm_start: bool,
    pub bpfa: BpfaConfig,
    pub ssim: SsimParams,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: Source::Phantom {
                spec: PhantomSpec::default(),
                seed: 0,
            },
            strategies: Strategy::ALL.to_vec(),
            sampling_ratios: vec![0.05, 0.10, 0.15, 0.20, 0.30, 0.50],
            rho: 0.5,
            seeds: vec![0, 1, 2, 3, 4],
            noise_sigma: 0.0,
            warm_start: false,
            bpfa: BpfaConfig::default(),
            ssim: SsimParams::default(),
            output: PathBuf::from("output"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.strategies.is_empty() || self.sampling_ratios.is_empty() || self.seeds.is_empty() {
            return bad("strategies, sampling_ratios and seeds must be non-empty".into());
        }
        if let Some(r) = self.sampling_ratios.iter().find(|&&r| !(r > 0.0 && r <= 1.0)) {
            return bad(format!("sampling ratio {r} outside (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad(format!("rho {} outside [0, 1]", self.rho));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma {} must be finite and non-negative",
                self.noise_sigma
            ));
        }
        if let Source::Phantom { spec, .. } = &self.source {
            spec.validate()?;
        }
        self.bpfa.validate()
    }
}
