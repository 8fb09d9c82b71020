//! Radiometric jitter: hue, saturation, contrast, brightness (applied in that order).

use serde::{Deserialize, Serialize};

use crate::tensor::ImageTensor;

pub const FACTOR_RANGE: (f64, f64) = (0.8, 1.2);
pub const HUE_RANGE: (f64, f64) = (-0.05, 0.05);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorJitter {
    pub brightness: f32,
    pub contrast: f32,
    pub saturation: f32,
    /// Shift as a fraction of the hue circle.
    pub hue: f32,
}

impl ColorJitter {
    pub fn neutral() -> Self {
        Self {
            brightness: 1.0,
            contrast: 1.0,
            saturation: 1.0,
            hue: 0.0,
        }
    }

    /// Brightness/contrast only, as used for PAN.
    pub fn luminance(brightness: f32, contrast: f32) -> Self {
        Self {
            brightness,
            contrast,
            ..Self::neutral()
        }
    }
}

fn rgb_to_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max > 0.0 { delta / max } else { 0.0 };
    let h = if delta <= 0.0 {
        0.0
    } else if max == r {
        ((g - b) / delta).rem_euclid(6.0) / 6.0
    } else if max == g {
        ((b - r) / delta + 2.0) / 6.0
    } else {
        ((r - g) / delta + 4.0) / 6.0
    };
    (h, s, v)
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = (h6.floor() as i32).rem_euclid(6);
    let f = h6 - h6.floor();
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

fn hsv_stage(img: &mut ImageTensor, f: impl Fn(f32, f32, f32) -> (f32, f32, f32)) {
    let n = img.plane_len();
    let data = img.data_mut();
    for i in 0..n {
        let (h, s, v) = rgb_to_hsv(data[i], data[n + i], data[2 * n + i]);
        let (h, s, v) = f(h, s, v);
        let (r, g, b) = hsv_to_rgb(h, s, v);
        data[i] = r.clamp(0.0, 1.0);
        data[n + i] = g.clamp(0.0, 1.0);
        data[2 * n + i] = b.clamp(0.0, 1.0);
    }
}

/// Applies hue → saturation → contrast → brightness, clamping after each stage.
///
/// Hue and saturation act on the first three bands only (as RGB) and are
/// skipped for images with fewer than three bands. Contrast pulls each band
/// toward its own global mean.
pub fn color_jitter(img: &ImageTensor, jitter: &ColorJitter) -> ImageTensor {
    let mut out = img.clone();
    if out.channels() >= 3 {
        hsv_stage(&mut out, |h, s, v| (h + jitter.hue, s, v));
        hsv_stage(&mut out, |h, s, v| (h, (s * jitter.saturation).clamp(0.0, 1.0), v));
    }
    if jitter.contrast != 1.0 {
        for c in 0..out.channels() {
            let mean = out.channel_mean(c) as f32;
            for v in out.channel_mut(c) {
                *v = (mean + jitter.contrast * (*v - mean)).clamp(0.0, 1.0);
            }
        }
    }
    if jitter.brightness != 1.0 {
        for v in out.data_mut() {
            *v = (*v * jitter.brightness).clamp(0.0, 1.0);
        }
    }
    out
}
