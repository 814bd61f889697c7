//! Flat key-value run configuration (TOML), shared by every subcommand.
//!
//! Keys:
//!
//! | key | default | used by |
//! |-----|---------|---------|
//! | `seed` | 0 | simulate (when no spec file), ablate (first seed) |
//! | `out_dir` | `out` | all |
//! | `input_dir` | `out_dir` | losses, optimize, track |
//! | `spec` | none | simulate |
//! | `interval` | 1 | losses, optimize |
//! | `frame` | `2 * interval` | optimize |
//! | `steps`, `lr` | 200, 0.5 | optimize |
//! | `losses` | `all` | losses, optimize |
//! | `tau`, `theta`, `epsilon` | 0.1, 0.7, 1e-12 | losses, optimize, ablate |
//! | `embed_gate`, `iou_gate`, `buffer`, `ema_alpha`, `min_confidence`, `lost_in_iou_stage`, `motion_gate` | see [`TrackerConfig`] | track, ablate |
//! | `iou_threshold` | 0.5 | eval, ablate |
//! | `num_seeds` | 5 | ablate |
//! | `variants` | `["sc", "sc,cc", "sc,ac", "all"]` | ablate |
//! | `refine_interval`, `refine_epochs`, `refine_lr` | see [`RefineOptions`] | ablate |
//!
//! Command-line flags carry the same names (with dashes) and override file
//! values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossConfig, LossWeights};
use crate::metrics::DEFAULT_IOU_THRESHOLD;
use crate::tracker::TrackerConfig;
use crate::workflows::RefineOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    pub interval: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frame: Option<usize>,
    pub steps: usize,
    pub lr: f64,
    pub losses: String,
    pub tau: f64,
    pub theta: f64,
    pub epsilon: f64,
    pub embed_gate: f64,
    pub iou_gate: f64,
    pub buffer: usize,
    pub ema_alpha: f64,
    pub min_confidence: f64,
    pub lost_in_iou_stage: bool,
    pub motion_gate: bool,
    pub iou_threshold: f64,
    pub num_seeds: usize,
    pub variants: Vec<String>,
    pub refine_interval: usize,
    pub refine_epochs: usize,
    pub refine_lr: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let loss = LossConfig::default();
        let tracker = TrackerConfig::default();
        let refine = RefineOptions::default();
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            input_dir: None,
            spec: None,
            interval: 1,
            frame: None,
            steps: 200,
            lr: 0.5,
            losses: "all".into(),
            tau: loss.tau,
            theta: loss.theta,
            epsilon: loss.epsilon,
            embed_gate: tracker.embed_gate,
            iou_gate: tracker.iou_gate,
            buffer: tracker.buffer,
            ema_alpha: tracker.ema_alpha,
            min_confidence: tracker.min_confidence,
            lost_in_iou_stage: tracker.lost_in_iou_stage,
            motion_gate: tracker.motion_gate,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            num_seeds: 5,
            variants: ["sc", "sc,cc", "sc,ac", "all"].map(String::from).to_vec(),
            refine_interval: refine.interval,
            refine_epochs: refine.epochs,
            refine_lr: refine.lr,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a file, or returns the defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
        }
    }

    /// Replaces the given keys. Unknown keys and ill-typed values are errors.
    pub fn with_overrides(&self, overrides: toml::Table) -> Result<Self> {
        let mut table = toml::Table::try_from(self).expect("config serializes");
        table.extend(overrides);
        table
            .try_into()
            .map_err(|e: toml::de::Error| Error::InvalidConfig(e.to_string()))
    }

    pub fn input_dir(&self) -> &Path {
        self.input_dir.as_deref().unwrap_or(&self.out_dir)
    }

    pub fn loss_config(&self) -> Result<LossConfig> {
        let cfg = LossConfig {
            tau: self.tau,
            theta: self.theta,
            epsilon: self.epsilon,
            weights: LossWeights::from_selection(&self.losses)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn tracker_config(&self) -> Result<TrackerConfig> {
        let cfg = TrackerConfig {
            embed_gate: self.embed_gate,
            iou_gate: self.iou_gate,
            buffer: self.buffer,
            ema_alpha: self.ema_alpha,
            min_confidence: self.min_confidence,
            lost_in_iou_stage: self.lost_in_iou_stage,
            motion_gate: self.motion_gate,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn refine_options(&self) -> RefineOptions {
        RefineOptions {
            interval: self.refine_interval,
            epochs: self.refine_epochs,
            lr: self.refine_lr,
        }
    }

    pub fn variant_weights(&self) -> Result<Vec<LossWeights>> {
        self.variants
            .iter()
            .map(|v| LossWeights::from_selection(v))
            .collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.num_seeds as u64).map(|k| self.seed + k).collect()
    }
}
