//! Experiment configuration: one TOML file describing the scenario, the
//! feature and loss hyperparameters, training and evaluation.

use std::path::Path;

use geochart_core::features::FeatureParams;
use geochart_core::losses::{BoxPolicy, LossConfig, LossWeights};
use geochart_core::metrics::MetricsConfig;
use geochart_core::net::AdamConfig;
use geochart_core::sim::ScenarioConfig;
use geochart_core::train::{RunConfig, SiteGeometry, TrainConfig, Variant};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub features: FeatureParams,
    pub loss: LossSection,
    pub train: TrainSection,
    #[serde(default)]
    pub metrics: MetricsConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Fraction of samples in the training split.
    pub ratio: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { ratio: 0.8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub coherence_time_s: f64,
    pub triplet_margin: f64,
    pub bilateration_margin: f64,
    #[serde(default)]
    pub box_policy: BoxPolicy,
    /// Weights of the losses a variant uses; inactive ones are zeroed per variant.
    #[serde(default = "unit_weights")]
    pub weights: LossWeights,
}

fn unit_weights() -> LossWeights {
    LossWeights::new(1.0, 1.0, 1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    /// Labeled samples for the affine fit of B2.
    pub affine_labels: usize,
    /// Labeled samples for the semi-supervised B3.
    pub semi_labels: usize,
    /// One training run per seed.
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::from_toml(&text).map_err(|m| Error::format(path, m))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if !(self.split.ratio > 0.0 && self.split.ratio <= 1.0) {
            return Err(invalid("split ratio must lie in (0, 1]"));
        }
        if self.features.taps == 0 || self.features.taps > self.scenario.subcarrier_count {
            return Err(invalid("feature taps must satisfy 1 <= C <= W"));
        }
        if self.train.seeds.is_empty() {
            return Err(invalid("at least one training seed is required"));
        }
        for v in Variant::ALL {
            self.run_config(v, self.train.seeds[0]).validate()?;
        }
        Ok(())
    }

    /// Hash of everything that shapes a trained model.
    pub fn config_hash(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }

    /// Hash of the parameters that determine the simulated dataset.
    pub fn dataset_hash(&self) -> String {
        #[derive(Serialize)]
        struct Part<'a> {
            scenario: &'a ScenarioConfig,
            split: &'a SplitConfig,
            taps: usize,
        }
        let part = Part { scenario: &self.scenario, split: &self.split, taps: self.features.taps };
        sha256_hex(toml::to_string(&part).expect("representable").as_bytes())
    }

    /// Training configuration of one variant and seed. Losses the variant does
    /// not use get weight zero.
    pub fn run_config(&self, variant: Variant, seed: u64) -> RunConfig {
        let mask = variant.default_weights();
        let w = self.loss.weights;
        let pick = |on: f64, v: f64| if on > 0.0 { v } else { 0.0 };
        RunConfig {
            variant,
            loss: LossConfig {
                coherence_time_s: self.loss.coherence_time_s,
                triplet_margin: self.loss.triplet_margin,
                bilateration_margin: self.loss.bilateration_margin,
                weights: LossWeights::new(
                    pick(mask.triplet, w.triplet),
                    pick(mask.bilateration, w.bilateration),
                    pick(mask.bbox, w.bbox),
                    pick(mask.mse, w.mse),
                ),
                box_policy: self.loss.box_policy,
            },
            label_count: match variant {
                Variant::B2 => self.train.affine_labels,
                Variant::B3 => self.train.semi_labels,
                _ => 0,
            },
            train: TrainConfig { epochs: self.train.epochs, batch_size: self.train.batch_size, adam: self.train.adam },
            seed,
        }
    }

    pub fn site(&self) -> SiteGeometry {
        SiteGeometry { ap_xy: self.scenario.ap_xy(), boxes: self.scenario.los_boxes() }
    }
}

fn invalid(msg: &str) -> Error {
    Error::Core(geochart_core::Error::InvalidInput(msg.into()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}
