//! Simulated multispectral bands and panchromatic images from ordinary images.
//!
//! Extra bands are random convex combinations of the source channels, and the
//! PAN image is a random convex combination of a random band subset, so every
//! synthesized value stays inside the source's value range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::ImageTensor;

/// Row-normalized `(c_max - c) × c` mixing matrix for the synthesized bands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMixMatrix {
    pub source_bands: usize,
    pub rows: Vec<Vec<f32>>,
}

impl SpectralMixMatrix {
    pub fn empty(source_bands: usize) -> Self {
        Self {
            source_bands,
            rows: Vec::new(),
        }
    }
}

/// Normalizes `raw` to sum to one; an all-zero draw becomes uniform weights.
fn normalize(raw: &[f64]) -> Vec<f32> {
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 {
        raw.iter().map(|v| (v / sum) as f32).collect()
    } else {
        vec![1.0 / raw.len() as f32; raw.len()]
    }
}

pub fn sample_mix_matrix(c: usize, c_max: usize, rng: &mut RngStream) -> Result<SpectralMixMatrix> {
    if c == 0 || c >= c_max {
        return Err(Error::NothingToSynthesize { channels: c, c_max });
    }
    let rows = (0..c_max - c)
        .map(|_| {
            let raw: Vec<f64> = (0..c).map(|_| rng.next_f64()).collect();
            normalize(&raw)
        })
        .collect();
    Ok(SpectralMixMatrix {
        source_bands: c,
        rows,
    })
}

/// Applies a mixing matrix: source bands first, then one band per matrix row.
pub fn apply_mix(img: &ImageTensor, mix: &SpectralMixMatrix) -> Result<ImageTensor> {
    let (c, h, w) = img.shape();
    if mix.source_bands != c {
        return Err(Error::ShapeError(format!(
            "mix matrix expects {} bands, image has {c}",
            mix.source_bands
        )));
    }
    let mut out = ImageTensor::zeros(c + mix.rows.len(), h, w);
    out.data_mut()[..img.len()].copy_from_slice(img.data());
    for (r, row) in mix.rows.iter().enumerate() {
        let mut acc = vec![0.0f64; h * w];
        for (j, &alpha) in row.iter().enumerate() {
            for (a, &v) in acc.iter_mut().zip(img.channel(j)) {
                *a += alpha as f64 * v as f64;
            }
        }
        for (o, a) in out.channel_mut(c + r).iter_mut().zip(acc) {
            *o = a as f32;
        }
    }
    Ok(out)
}

/// Expands `img` to `c_max` bands. Images that already have `c_max` bands pass through.
pub fn synthesize_ms(
    img: &ImageTensor,
    c_max: usize,
    rng: &mut RngStream,
) -> Result<(ImageTensor, SpectralMixMatrix)> {
    let c = img.channels();
    if c > c_max {
        return Err(Error::ShapeError(format!(
            "image has {c} bands, more than c_max = {c_max}"
        )));
    }
    if c == c_max {
        return Ok((img.clone(), SpectralMixMatrix::empty(c)));
    }
    let mix = sample_mix_matrix(c, c_max, rng)?;
    Ok((apply_mix(img, &mix)?, mix))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PanWeights {
    /// Strictly increasing band indices.
    pub subset: Vec<usize>,
    pub weights: Vec<f32>,
}

pub fn sample_pan_weights(c: usize, rng: &mut RngStream) -> Result<PanWeights> {
    if c < 2 {
        return Err(Error::TooFewBands(c));
    }
    let size = 2 + rng.choice(c - 1);
    let mut subset: Vec<usize> = rng.permutation(c).into_iter().take(size).collect();
    subset.sort_unstable();
    let raw: Vec<f64> = (0..size).map(|_| rng.next_f64()).collect();
    Ok(PanWeights {
        subset,
        weights: normalize(&raw),
    })
}

pub fn synthesize_pan(ms: &ImageTensor, weights: &PanWeights) -> Result<ImageTensor> {
    let (c, h, w) = ms.shape();
    if let Some(&bad) = weights.subset.iter().find(|&&i| i >= c) {
        return Err(Error::BandIndexError {
            index: bad,
            channels: c,
        });
    }
    let mut acc = vec![0.0f64; h * w];
    for (&band, &wt) in weights.subset.iter().zip(&weights.weights) {
        for (a, &v) in acc.iter_mut().zip(ms.channel(band)) {
            *a += wt as f64 * v as f64;
        }
    }
    ImageTensor::from_vec(1, h, w, acc.into_iter().map(|v| v as f32).collect())
}
