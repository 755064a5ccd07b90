//! Run configuration: TOML (`key = value` under `[section]` headers), with
//! command-line flags taking precedence.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use beampred::channel::{ArrayConfig, ChannelConfig};
use beampred::learn::{BoostParams, ClassifierSpec, ForestParams};
use beampred::{CqiParams, EncoderConfig, RaytraceConfig, SceneConfig, SimConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub n_samples: usize,
    pub train_frac: f64,
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    pub dataset: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            n_samples: 5000,
            train_frac: 0.8,
            seed: 1,
            workers: 0,
            dataset: PathBuf::from("dataset.jsonl"),
        }
    }
}

/// CQI bounds used by the all-beam evaluation and the CDF export, plus the
/// granularities evaluated there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CqiSection {
    pub p_upper: f64,
    pub p_lower: f64,
    pub granularities: Vec<f64>,
}

impl Default for CqiSection {
    fn default() -> Self {
        Self { p_upper: -20.0, p_lower: -70.0, granularities: vec![1.0, 2.0, 5.0] }
    }
}

impl CqiSection {
    pub fn params(&self, granularity: f64) -> beampred::Result<CqiParams> {
        CqiParams::new(self.p_upper, self.p_lower, granularity)
    }
}

/// Grid for the quantization sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub p_upper: Vec<f64>,
    pub p_lower: Vec<f64>,
    pub granularities: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            p_upper: vec![-20.0, -25.0, -30.0, -35.0],
            p_lower: vec![-60.0, -70.0],
            granularities: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Received power is divided by this floor to obtain the SNR fed to
    /// `log2(1 + SNR)`.
    pub noise_floor_dbm: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        // thermal noise over 100 MHz (kT = -174 dBm/Hz)
        Self { noise_floor_dbm: -94.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub scene: SceneConfig,
    pub raytrace: RaytraceConfig,
    pub array: ArrayConfig,
    pub channel: ChannelConfig,
    pub encoder: EncoderConfig,
    pub forest: ForestParams,
    pub boosting: BoostParams,
    pub classifier: ClassifierSpec,
    pub cqi: CqiSection,
    pub sweep: SweepSection,
    pub metrics: MetricsSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing config")?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            scene: self.scene.clone(),
            raytrace: self.raytrace.clone(),
            array: self.array.clone(),
            channel: self.channel.clone(),
            encoder: self.encoder.clone(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.sim().validate()?;
        self.forest.validate()?;
        self.boosting.validate()?;
        self.classifier.forest.validate()?;
        if !(self.run.train_frac > 0.0 && self.run.train_frac < 1.0) {
            bail!("train_frac must be in (0, 1)");
        }
        if self.classifier.n_classes != self.array.n_beams() {
            bail!(
                "classifier n_classes ({}) must equal the number of beam pairs ({})",
                self.classifier.n_classes,
                self.array.n_beams()
            );
        }
        for &r in &self.cqi.granularities {
            self.cqi.params(r)?;
        }
        for &u in &self.sweep.p_upper {
            for &l in &self.sweep.p_lower {
                for &r in &self.sweep.granularities {
                    CqiParams::new(u, l, r)?;
                }
            }
        }
        Ok(())
    }

    /// One-line JSON snapshot embedded in experiment outputs. The worker
    /// count is left out: results do not depend on it.
    pub fn snapshot(&self) -> String {
        let mut cfg = self.clone();
        cfg.run.workers = 0;
        serde_json::to_string(&cfg).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let cfg = RunConfig::from_toml(
            "[run]\nseed = 9\nn_samples = 12\n\n[scene]\ntruck_ratio = 0.25\n\n[forest]\nn_trees = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.run.seed, 9);
        assert_eq!(cfg.run.n_samples, 12);
        assert_eq!(cfg.scene.truck_ratio, 0.25);
        assert_eq!(cfg.scene.length, 200.0);
        assert_eq!(cfg.forest.n_trees, 7);
        assert_eq!(cfg.forest.min_leaf, 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[run]\nsede = 3\n").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}
