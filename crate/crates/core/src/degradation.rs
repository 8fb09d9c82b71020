//! Stochastic degradation: blur, downsampling and noise.
//!
//! Each image of a training pair gets its own [`DegradeSpec`], a fully
//! materialized record of the sampled operator. Stages run in the record's
//! stage order (blur, downsample, noise by default) and the result is clamped
//! to `[0, 1]` after every stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::{
    clamp01, convolve2d, median_filter, resample, BorderMode, ImageTensor, InterpMethod, Kernel,
};

pub const KERNEL_SIZES: [usize; 3] = [3, 5, 7];
pub const SIGMA_RANGE: (f64, f64) = (0.1, 3.0);
pub const THETA_RANGE: (f64, f64) = (0.0, 360.0);
pub const MOTION_OFFSET_RANGE: (f64, f64) = (-1.0, 1.0);
pub const SCALE_RANGE: (f64, f64) = (0.1, 0.5);
pub const GAUSSIAN_NOISE_RANGE: (f64, f64) = (0.01, 0.1);
pub const SALT_PEPPER_RANGE: (f64, f64) = (0.001, 0.01);
pub const POISSON_RANGE: (f64, f64) = (10.0, 50.0);
pub const SPECKLE_RANGE: (f64, f64) = (0.05, 0.2);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Blur {
    None,
    Gaussian { sigma: f64, k: usize },
    Box { k: usize },
    Motion { theta_deg: f64, offset: f64, k: usize },
    Median { k: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    None,
    Gaussian { sigma: f64 },
    SaltPepper { p: f64 },
    Poisson { lambda: f64 },
    Speckle { sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Blur,
    Downsample,
    Noise,
}

pub const DEFAULT_ORDER: [Stage; 3] = [Stage::Blur, Stage::Downsample, Stage::Noise];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradeSpec {
    pub blur: Blur,
    pub scale: f64,
    pub interp: InterpMethod,
    pub noise: Noise,
    pub order: Vec<Stage>,
}

impl DegradeSpec {
    /// No blur, no noise, no resizing.
    pub fn identity() -> Self {
        Self {
            blur: Blur::None,
            scale: 1.0,
            interp: InterpMethod::Nearest,
            noise: Noise::None,
            order: DEFAULT_ORDER.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Pretrain,
    #[serde(rename = "eval_4x")]
    Eval4x,
    #[serde(rename = "eval_8x")]
    Eval8x,
}

impl Profile {
    pub fn eval_ratio(self) -> Option<usize> {
        match self {
            Profile::Pretrain => None,
            Profile::Eval4x => Some(4),
            Profile::Eval8x => Some(8),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Pretrain => "pretrain",
            Profile::Eval4x => "eval_4x",
            Profile::Eval8x => "eval_8x",
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pretrain" => Ok(Profile::Pretrain),
            "eval_4x" => Ok(Profile::Eval4x),
            "eval_8x" => Ok(Profile::Eval8x),
            other => Err(Error::Config(format!("unknown profile `{other}`"))),
        }
    }
}

/// Which image of the pair a spec is drawn for. PAN is never downsampled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Ms,
    Pan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DegradeConfig {
    /// Probability that the blur stage is present during pretraining.
    pub blur_prob: f64,
    /// Probability that the noise stage is present during pretraining.
    pub noise_prob: f64,
}

impl Default for DegradeConfig {
    fn default() -> Self {
        Self {
            blur_prob: 0.8,
            noise_prob: 0.8,
        }
    }
}

fn draw(rng: &mut RngStream, range: (f64, f64)) -> f64 {
    range.0 + (range.1 - range.0) * rng.next_f64()
}

fn draw_kernel_size(rng: &mut RngStream) -> usize {
    KERNEL_SIZES[rng.choice(KERNEL_SIZES.len())]
}

pub fn sample_degrade_spec(
    rng: &mut RngStream,
    profile: Profile,
    target: Target,
    cfg: &DegradeConfig,
) -> DegradeSpec {
    if let Some(ratio) = profile.eval_ratio() {
        return match target {
            Target::Ms => DegradeSpec {
                blur: Blur::Gaussian { sigma: 1.0, k: 5 },
                scale: 1.0 / ratio as f64,
                interp: InterpMethod::Area,
                noise: Noise::None,
                order: DEFAULT_ORDER.to_vec(),
            },
            Target::Pan => DegradeSpec::identity(),
        };
    }

    let blur = if rng.bernoulli(cfg.blur_prob) {
        match rng.choice(4) {
            0 => Blur::Gaussian {
                sigma: draw(rng, SIGMA_RANGE),
                k: draw_kernel_size(rng),
            },
            1 => Blur::Box {
                k: draw_kernel_size(rng),
            },
            2 => Blur::Motion {
                theta_deg: draw(rng, THETA_RANGE),
                offset: draw(rng, MOTION_OFFSET_RANGE),
                k: draw_kernel_size(rng),
            },
            _ => Blur::Median {
                k: draw_kernel_size(rng),
            },
        }
    } else {
        Blur::None
    };
    let (scale, interp) = match target {
        Target::Ms => (
            draw(rng, SCALE_RANGE),
            InterpMethod::ALL[rng.choice(InterpMethod::ALL.len())],
        ),
        Target::Pan => (1.0, InterpMethod::Nearest),
    };
    let noise = if rng.bernoulli(cfg.noise_prob) {
        match rng.choice(4) {
            0 => Noise::Gaussian {
                sigma: draw(rng, GAUSSIAN_NOISE_RANGE),
            },
            1 => Noise::SaltPepper {
                p: draw(rng, SALT_PEPPER_RANGE),
            },
            2 => Noise::Poisson {
                lambda: draw(rng, POISSON_RANGE),
            },
            _ => Noise::Speckle {
                sigma: draw(rng, SPECKLE_RANGE),
            },
        }
    } else {
        Noise::None
    };
    DegradeSpec {
        blur,
        scale,
        interp,
        noise,
        order: DEFAULT_ORDER.to_vec(),
    }
}

/// Isotropic Gaussian sampled at integer offsets, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, k: usize) -> Result<Kernel> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidKernel(format!("sigma must be positive, got {sigma}")));
    }
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidKernel(format!("even kernel size {k}")));
    }
    let r = (k / 2) as f64;
    let mut w = Vec::with_capacity(k * k);
    for y in 0..k {
        for x in 0..k {
            let (dy, dx) = (y as f64 - r, x as f64 - r);
            w.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    let sum: f64 = w.iter().sum();
    Kernel::new(k, w.into_iter().map(|v| (v / sum) as f32).collect())
}

pub fn box_kernel(k: usize) -> Result<Kernel> {
    Kernel::new(k, vec![1.0 / (k * k) as f32; k * k])
}

const MOTION_SUPERSAMPLE: usize = 64;

/// Line-segment motion kernel.
///
/// A segment of length `k` at angle `theta_deg` (x to the right, y down) is
/// centered at `offset · (k-1)/2` pixels along its own direction. The segment
/// is supersampled and each sample is credited to the pixel cell containing
/// it, so a pixel's weight is the segment length inside that cell. Samples
/// falling outside the kernel are dropped before normalizing.
pub fn motion_kernel(theta_deg: f64, offset: f64, k: usize) -> Result<Kernel> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidKernel(format!("even kernel size {k}")));
    }
    let r = (k / 2) as f64;
    let theta = theta_deg.to_radians();
    let (dir_y, dir_x) = theta.sin_cos();
    let shift = offset.clamp(-1.0, 1.0) * r;
    let n = MOTION_SUPERSAMPLE * k;
    let mut acc = vec![0.0f64; k * k];
    for i in 0..n {
        let t = shift - k as f64 / 2.0 + (i as f64 + 0.5) * k as f64 / n as f64;
        let px = (t * dir_x).round();
        let py = (t * dir_y).round();
        if px.abs() > r || py.abs() > r {
            continue;
        }
        let (row, col) = ((py + r) as usize, (px + r) as usize);
        acc[row * k + col] += 1.0;
    }
    let total: f64 = acc.iter().sum();
    if total == 0.0 {
        return Ok(Kernel::identity().padded_to(k)?);
    }
    Kernel::new(k, acc.into_iter().map(|v| (v / total) as f32).collect())
}

pub fn apply_blur(img: &ImageTensor, blur: &Blur) -> Result<ImageTensor> {
    let kernel = match *blur {
        Blur::None => return Ok(img.clone()),
        Blur::Median { k } => return median_filter(img, k),
        Blur::Gaussian { sigma, k } => gaussian_kernel(sigma, k)?,
        Blur::Box { k } => box_kernel(k)?,
        Blur::Motion {
            theta_deg,
            offset,
            k,
        } => motion_kernel(theta_deg, offset, k)?,
    };
    Ok(clamp01(&convolve2d(img, &kernel, BorderMode::Replicate)?))
}

/// Output size of a downsample by `scale` along an axis of length `n`.
pub fn scaled_len(n: usize, scale: f64) -> usize {
    (n as f64 * scale).round() as usize
}

pub fn downsample(img: &ImageTensor, scale: f64, method: InterpMethod) -> Result<ImageTensor> {
    let (oh, ow) = (scaled_len(img.height(), scale), scaled_len(img.width(), scale));
    if oh == 0 || ow == 0 {
        return Err(Error::ImageTooSmall(format!(
            "{}x{} at scale {scale} gives {oh}x{ow}",
            img.height(),
            img.width()
        )));
    }
    if (oh, ow) == (img.height(), img.width()) && method == InterpMethod::Nearest {
        return Ok(img.clone());
    }
    resample(img, oh, ow, method)
}

fn poisson(rng: &mut RngStream, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean > 30.0 {
        return (mean + mean.sqrt() * rng.normal(0.0, 1.0)).round().max(0.0);
    }
    let u = rng.next_f64();
    let mut k = 0u32;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf && k < 200 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k as f64
}

/// Adds noise and clamps. Salt-and-pepper flips whole pixels (all channels at
/// once); the other models act on every element independently.
pub fn add_noise(img: &ImageTensor, noise: &Noise, rng: &mut RngStream) -> ImageTensor {
    match *noise {
        Noise::None => img.clone(),
        Noise::Gaussian { sigma } => {
            img.map(|v| (v as f64 + rng.normal(0.0, sigma)).clamp(0.0, 1.0) as f32)
        }
        Noise::Poisson { lambda } => {
            img.map(|v| (poisson(rng, lambda * v as f64) / lambda).clamp(0.0, 1.0) as f32)
        }
        Noise::Speckle { sigma } => {
            img.map(|v| (v as f64 * rng.normal(1.0, sigma)).clamp(0.0, 1.0) as f32)
        }
        Noise::SaltPepper { p } => {
            let mut out = img.clone();
            let (c, h, w) = img.shape();
            let plane = h * w;
            for i in 0..plane {
                if rng.bernoulli(p) {
                    let v = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
                    for ch in 0..c {
                        out.data_mut()[ch * plane + i] = v;
                    }
                }
            }
            out
        }
    }
}

/// Runs one image through its spec's stages.
pub fn degrade(img: &ImageTensor, spec: &DegradeSpec, rng: &mut RngStream) -> Result<ImageTensor> {
    let mut cur = img.clone();
    for stage in &spec.order {
        cur = match stage {
            Stage::Blur => apply_blur(&cur, &spec.blur)?,
            Stage::Downsample => downsample(&cur, spec.scale, spec.interp)?,
            Stage::Noise => add_noise(&cur, &spec.noise, rng),
        };
    }
    Ok(cur)
}

/// Degrades a (MS, PAN) pair; only the MS image changes resolution.
pub fn degrade_pair(
    ms: &ImageTensor,
    pan: &ImageTensor,
    spec_ms: &DegradeSpec,
    spec_pan: &DegradeSpec,
    rng_ms: &mut RngStream,
    rng_pan: &mut RngStream,
) -> Result<(ImageTensor, ImageTensor)> {
    if spec_pan.scale != 1.0 {
        return Err(Error::Config(format!(
            "PAN degradation must keep scale 1.0, got {}",
            spec_pan.scale
        )));
    }
    Ok((degrade(ms, spec_ms, rng_ms)?, degrade(pan, spec_pan, rng_pan)?))
}
