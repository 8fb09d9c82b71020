//! Simulated training/evaluation pairs and their on-disk layout.
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/samples/NNNNNN.pft        lrms, pan, gt as three back-to-back PFT1 records
//! <dir>/samples/NNNNNN.spec.json  everything drawn for that sample
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmentation::{
    channel_mask, color_jitter, highpass_pan, permute_bands, sample_augment_spec, spatial_augment, AugmentSpec,
};
use crate::config::RunConfig;
use crate::degradation::{degrade_pair, sample_degrade_spec, DegradeSpec, Profile, Target};
use crate::error::{Error, Result};
use crate::io::{atomic_write, list_corpus, pft, read_corpus_image, read_json, write_json};
use crate::rng::{labels, RngStream};
use crate::synthesis::{sample_pan_weights, synthesize_ms, synthesize_pan, PanWeights, SpectralMixMatrix};
use crate::tensor::ImageTensor;

pub const DATASET_FORMAT: &str = "pansim-dataset/1";

/// Everything drawn while simulating one sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub index: usize,
    pub source: String,
    pub source_bands: usize,
    pub profile: Profile,
    pub seed: u64,
    pub config_hash: String,
    pub mix: SpectralMixMatrix,
    pub pan_weights: PanWeights,
    pub augment: AugmentSpec,
    pub degrade_ms: DegradeSpec,
    pub degrade_pan: DegradeSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePair {
    pub lrms: ImageTensor,
    pub pan: ImageTensor,
    pub gt: ImageTensor,
    pub meta: SampleMeta,
}

impl SamplePair {
    pub fn id(&self) -> String {
        format!("{:06}", self.meta.index)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub tensors: String,
    pub spec: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub config_hash: String,
    pub profile: Profile,
    pub c_max: usize,
    pub crop: usize,
    pub samples: Vec<ManifestEntry>,
}

impl Manifest {
    /// Resolution ratio used for ERGAS and the no-reference indices.
    pub fn ratio(&self, samples: &[SamplePair]) -> f64 {
        match self.profile.eval_ratio() {
            Some(r) => r as f64,
            None => samples
                .first()
                .map(|s| s.gt.height() as f64 / s.lrms.height() as f64)
                .unwrap_or(4.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub samples: Vec<SamplePair>,
}

impl Dataset {
    pub fn ratio(&self) -> f64 {
        self.manifest.ratio(&self.samples)
    }
}

/// Central `size × size` window; errors if the image is smaller.
pub fn center_crop(img: &ImageTensor, size: usize) -> Result<ImageTensor> {
    let (c, h, w) = img.shape();
    if h < size || w < size {
        return Err(Error::ImageTooSmall(format!("{h}x{w} is smaller than crop {size}")));
    }
    let (y0, x0) = ((h - size) / 2, (w - size) / 2);
    Ok(ImageTensor::from_fn(c, size, size, |ch, y, x| img.get(ch, y0 + y, x0 + x)))
}

struct CorpusImage {
    name: String,
    image: ImageTensor,
}

fn load_corpus(dir: &Path, crop: usize, c_max: usize) -> Result<Vec<CorpusImage>> {
    let mut out = Vec::new();
    for path in list_corpus(dir)? {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let loaded = read_corpus_image(&path).and_then(|img| {
            if img.channels() > c_max {
                return Err(Error::ShapeError(format!("{} bands exceed c_max", img.channels())));
            }
            center_crop(&img, crop)
        });
        match loaded {
            Ok(image) => out.push(CorpusImage { name, image }),
            Err(e) => log::warn!("skipping {}: {e}", path.display()),
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(out)
}

/// Simulates one training pair from a clean RGB (or gray) crop.
pub fn simulate_sample(
    image: &ImageTensor,
    source: &str,
    index: usize,
    profile: Profile,
    cfg: &RunConfig,
    global: &RngStream,
) -> Result<SamplePair> {
    let root = global.derive(labels::SAMPLE, index as u64);
    let (mut ms, mix) = synthesize_ms(image, cfg.c_max, &mut root.derive(labels::MIX, 0))?;
    let pan_weights = sample_pan_weights(cfg.c_max, &mut root.derive(labels::PAN, 0))?;
    let mut pan = synthesize_pan(&ms, &pan_weights)?;

    let augment = match profile {
        Profile::Pretrain => sample_augment_spec(&mut root.derive(labels::AUGMENT, 0), &cfg.augment, cfg.c_max),
        _ => AugmentSpec::identity(),
    };
    // Spectral operations on the clean pair; the ground truth is the clean MS
    // after everything except masking.
    if let Some(perm) = &augment.shuffle {
        ms = permute_bands(&ms, perm)?;
    }
    if let Some(j) = &augment.jitter_ms {
        ms = color_jitter(&ms, j);
    }
    if let Some(hp) = &augment.pan_highpass {
        pan = highpass_pan(&pan, hp)?;
    }
    if let Some(j) = &augment.jitter_pan {
        pan = color_jitter(&pan, j);
    }
    let (ms, pan, _) = spatial_augment(&ms, &pan, &ms, &augment)?;
    let gt = ms.clone();

    let degrade_ms = sample_degrade_spec(&mut root.derive(labels::DEGRADE_MS, 0), profile, Target::Ms, &cfg.degrade);
    let degrade_pan = sample_degrade_spec(&mut root.derive(labels::DEGRADE_PAN, 0), profile, Target::Pan, &cfg.degrade);
    let (mut lrms, pan) = degrade_pair(
        &ms,
        &pan,
        &degrade_ms,
        &degrade_pan,
        &mut root.derive(labels::NOISE_MS, 0),
        &mut root.derive(labels::NOISE_PAN, 0),
    )?;
    if let Some(mask) = &augment.mask {
        lrms = channel_mask(&lrms, mask)?;
    }

    Ok(SamplePair {
        lrms,
        pan,
        gt,
        meta: SampleMeta {
            index,
            source: source.to_string(),
            source_bands: image.channels(),
            profile,
            seed: root.state(),
            config_hash: format!("{:016x}", cfg.hash()),
            mix,
            pan_weights,
            augment,
            degrade_ms,
            degrade_pan,
        },
    })
}

/// Simulates `count` pairs from the images in `corpus_dir` (cycled in name
/// order) and writes them to `out_dir`. `cfg.seed` is the global seed.
pub fn build_dataset(corpus_dir: &Path, out_dir: &Path, count: usize, profile: Profile, cfg: &RunConfig) -> Result<Manifest> {
    cfg.validate()?;
    let corpus = load_corpus(corpus_dir, cfg.crop, cfg.c_max)?;
    let global = RngStream::new(cfg.seed);
    std::fs::create_dir_all(out_dir.join("samples"))?;

    let entries: Vec<ManifestEntry> = (0..count)
        .into_par_iter()
        .map(|i| {
            let src = &corpus[i % corpus.len()];
            let pair = simulate_sample(&src.image, &src.name, i, profile, cfg, &global)?;
            let tensors = format!("samples/{i:06}.pft");
            let spec = format!("samples/{i:06}.spec.json");
            let mut bytes = pft::encode(&pair.lrms);
            pft::encode_into(&mut bytes, &pair.pan);
            pft::encode_into(&mut bytes, &pair.gt);
            atomic_write(&out_dir.join(&tensors), &bytes)?;
            write_json(&out_dir.join(&spec), &pair.meta)?;
            Ok(ManifestEntry {
                index: i,
                tensors,
                spec,
                source: src.name.clone(),
            })
        })
        .collect::<Result<_>>()?;

    let manifest = Manifest {
        format: DATASET_FORMAT.to_string(),
        seed: cfg.seed,
        config_hash: format!("{:016x}", cfg.hash()),
        profile,
        c_max: cfg.c_max,
        crop: cfg.crop,
        samples: entries,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    log::info!("wrote {count} {} samples to {}", profile.name(), out_dir.display());
    Ok(manifest)
}

pub fn load_sample(dir: &Path, entry: &ManifestEntry) -> Result<SamplePair> {
    let bytes = std::fs::read(dir.join(&entry.tensors))?;
    let mut parts = pft::decode_all(&bytes)?;
    if parts.len() != 3 {
        return Err(Error::format(0, format!("{} holds {} tensors, expected 3", entry.tensors, parts.len())));
    }
    let gt = parts.pop().expect("three parts");
    let pan = parts.pop().expect("three parts");
    let lrms = parts.pop().expect("three parts");
    let meta: SampleMeta = read_json(&dir.join(&entry.spec))?;
    Ok(SamplePair { lrms, pan, gt, meta })
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    if manifest.format != DATASET_FORMAT {
        return Err(Error::Config(format!("unknown dataset format `{}`", manifest.format)));
    }
    let samples = manifest
        .samples
        .par_iter()
        .map(|e| load_sample(dir, e))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, samples })
}

/// Path of the manifest inside a dataset directory.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}
