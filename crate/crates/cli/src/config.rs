//! Experiment configuration: one JSON-serializable struct covering
//! generation, training, and evaluation. Every field has a default, so a
//! config file only needs the keys it wants to change.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rim_core::baselines::{ImatSpec, ZeroingSpec};
use rim_core::cfar::CfarSpec;
use rim_core::cvnn::{AdamParams, ModelSpec};
use rim_core::dataset::DatasetSizes;
use rim_core::metrics::ToleranceSpec;
use rim_core::spectrum::SpectrumConfig;
use rim_core::synth::{RadarConfig, SceneDistribution};
use rim_core::{Error, Result};

/// Training objective of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Balanced cross-entropy on relaxed detections, trained through the
    /// detector.
    Bce,
    /// Complex regression onto the clean map.
    Mse,
    /// Magnitude-only regression onto the clean map.
    Magmse,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Bce => "bce",
            Objective::Mse => "mse",
            Objective::Magmse => "magmse",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(Objective::Bce),
            "mse" => Ok(Objective::Mse),
            "magmse" => Ok(Objective::Magmse),
            other => Err(Error::invalid(
                "objective",
                format!("unknown objective {other:?}, expected bce|mse|magmse"),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub output_dir: PathBuf,
    pub radar: RadarConfig,
    pub distribution: SceneDistribution,
    pub sizes: DatasetSizes,
    pub spectrum: SpectrumConfig,
    pub model: ModelSpec,
    pub objective: Objective,
    /// Positive-class weight of the detection loss.
    pub alpha: f64,
    pub cfar: CfarSpec,
    pub tolerance: ToleranceSpec,
    pub adam: AdamParams,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub zeroing: ZeroingSpec,
    pub imat: ImatSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_dir: PathBuf::from("dataset"),
            output_dir: PathBuf::from("runs"),
            radar: RadarConfig::default(),
            distribution: SceneDistribution::default(),
            sizes: DatasetSizes::desk_scale(),
            spectrum: SpectrumConfig::default(),
            model: ModelSpec::default(),
            objective: Objective::Bce,
            alpha: 0.75,
            cfar: CfarSpec::default(),
            tolerance: ToleranceSpec::default(),
            adam: AdamParams::default(),
            batch_size: 8,
            max_epochs: 200,
            patience: 10,
            seed: 1,
            zeroing: ZeroingSpec::default(),
            imat: ImatSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self =
            serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        self.distribution.validate(&self.radar)?;
        self.sizes.validate()?;
        self.model.validate()?;
        let map_dims = [
            self.spectrum.range_bins,
            self.spectrum.doppler_bins,
            self.radar.num_receivers,
        ];
        self.cfar.validate(map_dims)?;
        self.adam.validate()?;
        self.zeroing.validate()?;
        self.imat.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(
                "alpha",
                format!("must be in [0, 1], got {}", self.alpha),
            ));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs", "must be at least 1"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience", "must be at least 1"));
        }
        Ok(())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}-seed{}.ckpt", self.objective.name(), self.seed))
    }

    pub fn run_record_path(&self) -> PathBuf {
        self.output_dir
            .join(format!("{}-seed{}.run.json", self.objective.name(), self.seed))
    }
}
