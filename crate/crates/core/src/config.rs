//! Run configuration (JSON) and its content hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augmentation::AugmentProbs;
use crate::degradation::DegradeConfig;
use crate::error::{Error, Result};
use crate::optim::AdamWConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub peak_lr: f64,
    pub epochs: usize,
    pub warmup_epochs: usize,
    /// Share of the dataset held out for per-epoch validation (taken from the end).
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 12,
            peak_lr: 1e-3,
            epochs: 100,
            warmup_epochs: 10,
            val_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub lr: f64,
    pub epochs: usize,
    pub warmup_epochs: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            epochs: 40,
            warmup_epochs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Leading samples of the evaluation dataset used as one-shot tuning pairs;
    /// the remainder is the shared validation set.
    pub tune_images: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { tune_images: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub c_max: usize,
    pub crop: usize,
    pub train: TrainConfig,
    pub tune: TuneConfig,
    pub optimizer: AdamWConfig,
    pub augment: AugmentProbs,
    pub degrade: DegradeConfig,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            c_max: 8,
            crop: 64,
            train: TrainConfig::default(),
            tune: TuneConfig::default(),
            optimizer: AdamWConfig::default(),
            augment: AugmentProbs::default(),
            degrade: DegradeConfig::default(),
            bench: BenchConfig::default(),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        if self.c_max < 2 {
            return Err(Error::Config("c_max must be at least 2".into()));
        }
        if self.crop < 8 {
            return Err(Error::Config("crop must be at least 8 pixels".into()));
        }
        if t.batch_size == 0 || t.epochs == 0 || t.peak_lr <= 0.0 {
            return Err(Error::Config("train batch_size, epochs and peak_lr must be positive".into()));
        }
        if t.warmup_epochs >= t.epochs {
            return Err(Error::Config("train.warmup_epochs must be below train.epochs".into()));
        }
        if !(0.0..1.0).contains(&t.val_fraction) {
            return Err(Error::Config("train.val_fraction must lie in [0, 1)".into()));
        }
        if self.tune.epochs == 0 || self.tune.lr < 0.0 || self.tune.warmup_epochs >= self.tune.epochs {
            return Err(Error::Config("tune needs epochs > warmup_epochs and lr >= 0".into()));
        }
        let a = &self.augment;
        for (n, p) in [
            ("augment.flip_h", a.flip_h),
            ("augment.flip_v", a.flip_v),
            ("augment.rotate", a.rotate),
            ("augment.shuffle", a.shuffle),
            ("augment.mask", a.mask),
            ("augment.pan_highpass", a.pan_highpass),
            ("augment.jitter_ms", a.jitter_ms),
            ("augment.jitter_pan", a.jitter_pan),
            ("degrade.blur_prob", self.degrade.blur_prob),
            ("degrade.noise_prob", self.degrade.noise_prob),
        ] {
            check_prob(n, p)?;
        }
        if self.bench.tune_images == 0 {
            return Err(Error::Config("bench.tune_images must be positive".into()));
        }
        Ok(())
    }

    /// First eight bytes of SHA-256 over the canonical (key-sorted) JSON with the seed zeroed.
    pub fn hash(&self) -> u64 {
        let mut unseeded = self.clone();
        unseeded.seed = 0;
        let canonical = serde_json::to_value(&unseeded)
            .expect("config serializes")
            .to_string();
        let digest = Sha256::digest(canonical.as_bytes());
        u64::from_be_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}
