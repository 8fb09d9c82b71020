//! Spatial and spectral augmentations for simulated training pairs.
//!
//! Spectral operations (band shuffle, color jitter, PAN high-pass, band
//! masking) run on the clean images first, then the geometric operations are
//! applied jointly to MS, PAN and the ground truth. Shuffle and MS jitter are
//! applied to the ground truth as well; masking touches only the degraded
//! network input, and PAN jitter/high-pass only the PAN input.

mod color;
mod edges;

pub use color::{color_jitter, ColorJitter, FACTOR_RANGE, HUE_RANGE};
pub use edges::{
    canny, dog_kernel, highpass_pan, laplacian3, sobel_gradients, sobel_magnitude, HighPass,
    CANNY_HIGH, CANNY_LOW,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::ImageTensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    pub flip_h: bool,
    pub flip_v: bool,
    pub rot_quarter: u8,
    pub shuffle: Option<Vec<usize>>,
    pub mask: Option<Vec<usize>>,
    pub pan_highpass: Option<HighPass>,
    pub jitter_ms: Option<ColorJitter>,
    pub jitter_pan: Option<ColorJitter>,
}

impl AugmentSpec {
    pub fn identity() -> Self {
        Self {
            flip_h: false,
            flip_v: false,
            rot_quarter: 0,
            shuffle: None,
            mask: None,
            pan_highpass: None,
            jitter_ms: None,
            jitter_pan: None,
        }
    }
}

/// Inclusion probability of each optional augmentation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentProbs {
    pub flip_h: f64,
    pub flip_v: f64,
    pub rotate: f64,
    pub shuffle: f64,
    pub mask: f64,
    pub pan_highpass: f64,
    pub jitter_ms: f64,
    pub jitter_pan: f64,
}

impl AugmentProbs {
    pub fn all(p: f64) -> Self {
        Self {
            flip_h: p,
            flip_v: p,
            rotate: p,
            shuffle: p,
            mask: p,
            pan_highpass: p,
            jitter_ms: p,
            jitter_pan: p,
        }
    }
}

impl Default for AugmentProbs {
    fn default() -> Self {
        Self::all(0.5)
    }
}

fn factor(rng: &mut RngStream, range: (f64, f64)) -> f32 {
    (range.0 + (range.1 - range.0) * rng.next_f64()) as f32
}

pub fn sample_augment_spec(rng: &mut RngStream, probs: &AugmentProbs, c_max: usize) -> AugmentSpec {
    let flip_h = rng.bernoulli(probs.flip_h);
    let flip_v = rng.bernoulli(probs.flip_v);
    let rot_quarter = if rng.bernoulli(probs.rotate) {
        1 + rng.choice(3) as u8
    } else {
        0
    };
    let shuffle = rng
        .bernoulli(probs.shuffle)
        .then(|| rng.permutation(c_max));
    let mask = if c_max > 1 && rng.bernoulli(probs.mask) {
        let count = 1 + rng.choice(c_max - 1);
        let mut set: Vec<usize> = rng.permutation(c_max).into_iter().take(count).collect();
        set.sort_unstable();
        Some(set)
    } else {
        None
    };
    let pan_highpass = rng.bernoulli(probs.pan_highpass).then(|| match rng.choice(4) {
        0 => HighPass::Laplacian3,
        1 => HighPass::Dog,
        2 => HighPass::Sobel,
        _ => HighPass::Canny {
            low: CANNY_LOW,
            high: CANNY_HIGH,
        },
    });
    let jitter_ms = rng.bernoulli(probs.jitter_ms).then(|| ColorJitter {
        brightness: factor(rng, FACTOR_RANGE),
        contrast: factor(rng, FACTOR_RANGE),
        saturation: factor(rng, FACTOR_RANGE),
        hue: factor(rng, HUE_RANGE),
    });
    let jitter_pan = rng
        .bernoulli(probs.jitter_pan)
        .then(|| ColorJitter::luminance(factor(rng, FACTOR_RANGE), factor(rng, FACTOR_RANGE)));
    AugmentSpec {
        flip_h,
        flip_v,
        rot_quarter,
        shuffle,
        mask,
        pan_highpass,
        jitter_ms,
        jitter_pan,
    }
}

fn geometric(img: &ImageTensor, spec: &AugmentSpec) -> ImageTensor {
    let mut out = img.clone();
    if spec.flip_h {
        out = out.flip_h();
    }
    if spec.flip_v {
        out = out.flip_v();
    }
    out.rot90(spec.rot_quarter)
}

/// Same flips and rotation on all three images (flip_h, flip_v, then rotation).
pub fn spatial_augment(
    ms: &ImageTensor,
    pan: &ImageTensor,
    gt: &ImageTensor,
    spec: &AugmentSpec,
) -> Result<(ImageTensor, ImageTensor, ImageTensor)> {
    let hw = (ms.height(), ms.width());
    if (pan.height(), pan.width()) != hw || (gt.height(), gt.width()) != hw {
        return Err(Error::ShapeError(
            "spatial augmentation needs MS, PAN and GT of equal size".into(),
        ));
    }
    Ok((geometric(ms, spec), geometric(pan, spec), geometric(gt, spec)))
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::ShapeError(format!(
            "permutation of length {} for {n} bands",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::ShapeError(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Reorders bands so that output band `i` is input band `perm[i]`.
pub fn permute_bands(img: &ImageTensor, perm: &[usize]) -> Result<ImageTensor> {
    check_permutation(perm, img.channels())?;
    let bands: Vec<ImageTensor> = perm.iter().map(|&p| img.band(p)).collect();
    ImageTensor::concat(&bands.iter().collect::<Vec<_>>())
}

/// Applies one band permutation to both the input MS and its ground truth.
pub fn channel_shuffle(
    ms: &ImageTensor,
    gt: &ImageTensor,
    perm: &[usize],
) -> Result<(ImageTensor, ImageTensor)> {
    Ok((permute_bands(ms, perm)?, permute_bands(gt, perm)?))
}

/// Zeroes the listed bands of a (degraded) network input.
pub fn channel_mask(ms: &ImageTensor, mask: &[usize]) -> Result<ImageTensor> {
    let mut out = ms.clone();
    for &b in mask {
        if b >= ms.channels() {
            return Err(Error::BandIndexError {
                index: b,
                channels: ms.channels(),
            });
        }
        out.channel_mut(b).fill(0.0);
    }
    Ok(out)
}
