//! Channel-major image tensors and the spatial primitives built on them.
//!
//! Everything in the workbench (multispectral, panchromatic, ground truth and
//! network predictions) is carried as an [`ImageTensor`]: `C×H×W` 32-bit
//! floats laid out channel by channel, row-major inside each channel, with a
//! nominal value range of `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ImageTensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, 0.0)
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        assert!(
            channels > 0 && height > 0 && width > 0,
            "tensor dimensions must be positive"
        );
        Self {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::ShapeError(format!(
                "dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if data.len() != channels * height * width {
            return Err(Error::ShapeError(format!(
                "data length {} does not match {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    /// Builds a tensor by evaluating `f(c, y, x)` at every element.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut out = Self::zeros(channels, height, width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    out.data[(c * height + y) * width + x] = f(c, y, x);
                }
            }
        }
        out
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: f32) {
        self.data[(c * self.height + y) * self.width + x] = value;
    }

    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies a single band out as a `1×H×W` tensor.
    pub fn band(&self, c: usize) -> ImageTensor {
        ImageTensor {
            channels: 1,
            height: self.height,
            width: self.width,
            data: self.channel(c).to_vec(),
        }
    }

    /// Stacks tensors of equal spatial size along the channel axis.
    pub fn concat(parts: &[&ImageTensor]) -> Result<ImageTensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::ShapeError("concat of zero tensors".into()))?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::new();
        let mut channels = 0;
        for p in parts {
            if p.height != h || p.width != w {
                return Err(Error::ShapeError(format!(
                    "concat spatial mismatch {}x{} vs {h}x{w}",
                    p.height, p.width
                )));
            }
            channels += p.channels;
            data.extend_from_slice(&p.data);
        }
        ImageTensor::from_vec(channels, h, w, data)
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.shape() == other.shape()
    }

    pub fn map(&self, mut f: impl FnMut(f32) -> f32) -> ImageTensor {
        ImageTensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn min_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn channel_mean(&self, c: usize) -> f64 {
        let band = self.channel(c);
        band.iter().map(|&v| v as f64).sum::<f64>() / band.len() as f64
    }

    /// Appends all-zero bands until the tensor has `channels` bands.
    pub fn zero_padded(&self, channels: usize) -> Result<ImageTensor> {
        if self.channels > channels {
            return Err(Error::ShapeError(format!(
                "cannot pad {} bands down to {channels}",
                self.channels
            )));
        }
        let mut out = ImageTensor::zeros(channels, self.height, self.width);
        out.data[..self.data.len()].copy_from_slice(&self.data);
        Ok(out)
    }

    /// Mirror left-right.
    pub fn flip_h(&self) -> ImageTensor {
        let (h, w) = (self.height, self.width);
        ImageTensor::from_fn(self.channels, h, w, |c, y, x| self.get(c, y, w - 1 - x))
    }

    /// Mirror top-bottom.
    pub fn flip_v(&self) -> ImageTensor {
        let (h, w) = (self.height, self.width);
        ImageTensor::from_fn(self.channels, h, w, |c, y, x| self.get(c, h - 1 - y, x))
    }

    /// Rotates by `quarter_turns × 90°` counter-clockwise.
    pub fn rot90(&self, quarter_turns: u8) -> ImageTensor {
        let (h, w) = (self.height, self.width);
        match quarter_turns % 4 {
            0 => self.clone(),
            1 => ImageTensor::from_fn(self.channels, w, h, |c, y, x| self.get(c, x, w - 1 - y)),
            2 => ImageTensor::from_fn(self.channels, h, w, |c, y, x| {
                self.get(c, h - 1 - y, w - 1 - x)
            }),
            _ => ImageTensor::from_fn(self.channels, w, h, |c, y, x| self.get(c, h - 1 - x, y)),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Square convolution kernel with odd side length.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f32>,
}

impl Kernel {
    pub fn new(size: usize, weights: Vec<f32>) -> Result<Self> {
        if size == 0 || size % 2 == 0 {
            return Err(Error::InvalidKernel(format!(
                "kernel size must be odd and positive, got {size}"
            )));
        }
        if weights.len() != size * size {
            return Err(Error::InvalidKernel(format!(
                "expected {} weights for a {size}x{size} kernel, got {}",
                size * size,
                weights.len()
            )));
        }
        Ok(Self { size, weights })
    }

    pub fn identity() -> Self {
        Self {
            size: 1,
            weights: vec![1.0],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.weights[row * self.size + col]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().map(|&w| w as f64).sum()
    }

    pub fn transpose(&self) -> Kernel {
        let k = self.size;
        let mut weights = vec![0.0; k * k];
        for r in 0..k {
            for c in 0..k {
                weights[c * k + r] = self.weights[r * k + c];
            }
        }
        Kernel { size: k, weights }
    }

    /// Embeds this kernel at the center of a larger odd-sized zero kernel.
    pub fn padded_to(&self, size: usize) -> Result<Kernel> {
        if size < self.size || size % 2 == 0 {
            return Err(Error::InvalidKernel(format!(
                "cannot pad {}x{} kernel to {size}x{size}",
                self.size, self.size
            )));
        }
        let off = (size - self.size) / 2;
        let mut weights = vec![0.0; size * size];
        for r in 0..self.size {
            for c in 0..self.size {
                weights[(r + off) * size + c + off] = self.at(r, c);
            }
        }
        Ok(Kernel { size, weights })
    }

    /// Elementwise difference of two kernels of equal size.
    pub fn difference(&self, other: &Kernel) -> Result<Kernel> {
        if self.size != other.size {
            return Err(Error::InvalidKernel("kernel size mismatch".into()));
        }
        let weights = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Kernel {
            size: self.size,
            weights,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorderMode {
    #[default]
    Replicate,
    /// Mirror without repeating the edge sample (`d c b | a b c d`).
    Reflect,
    Zero,
}

/// Maps a possibly out-of-range coordinate onto the image, or `None` for zero padding.
#[inline]
pub(crate) fn border_index(i: isize, n: usize, mode: BorderMode) -> Option<usize> {
    let n_i = n as isize;
    if (0..n_i).contains(&i) {
        return Some(i as usize);
    }
    match mode {
        BorderMode::Replicate => Some(i.clamp(0, n_i - 1) as usize),
        BorderMode::Zero => None,
        BorderMode::Reflect => {
            if n == 1 {
                return Some(0);
            }
            let period = 2 * (n_i - 1);
            let mut j = i.rem_euclid(period);
            if j >= n_i {
                j = period - j;
            }
            Some(j as usize)
        }
    }
}

/// Convolves every channel with `kernel` (true convolution, kernel flipped).
///
/// No clamping is applied, so the operation stays linear.
pub fn convolve2d(img: &ImageTensor, kernel: &Kernel, border: BorderMode) -> Result<ImageTensor> {
    if kernel.size() % 2 == 0 {
        return Err(Error::InvalidKernel(format!(
            "even kernel size {}",
            kernel.size()
        )));
    }
    let (c, h, w) = img.shape();
    let k = kernel.size();
    let r = kernel.radius() as isize;
    let mut out = ImageTensor::zeros(c, h, w);
    for ch in 0..c {
        let src = img.channel(ch);
        let dst = out.channel_mut(ch);
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f64;
                for ky in 0..k {
                    let sy = y as isize - (ky as isize - r);
                    let Some(sy) = border_index(sy, h, border) else {
                        continue;
                    };
                    for kx in 0..k {
                        let sx = x as isize - (kx as isize - r);
                        let Some(sx) = border_index(sx, w, border) else {
                            continue;
                        };
                        acc += kernel.at(ky, kx) as f64 * src[sy * w + sx] as f64;
                    }
                }
                dst[y * w + x] = acc as f32;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpMethod {
    Nearest,
    Bilinear,
    Bicubic,
    Area,
}

impl InterpMethod {
    pub const ALL: [InterpMethod; 4] = [
        InterpMethod::Nearest,
        InterpMethod::Bilinear,
        InterpMethod::Bicubic,
        InterpMethod::Area,
    ];
}

const CUBIC_A: f64 = -0.5;

fn cubic_weight(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        ((CUBIC_A + 2.0) * t - (CUBIC_A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((CUBIC_A * t - 5.0 * CUBIC_A) * t + 8.0 * CUBIC_A) * t - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source taps `(index, weight)` for every output coordinate along one axis.
fn axis_taps(n_in: usize, n_out: usize, method: InterpMethod) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    let last = n_in as isize - 1;
    let clampi = |i: isize| i.clamp(0, last) as usize;
    (0..n_out)
        .map(|o| {
            let center = (o as f64 + 0.5) * scale - 0.5;
            match method {
                InterpMethod::Nearest => {
                    let i = ((o as f64 + 0.5) * scale).floor() as isize;
                    vec![(clampi(i), 1.0)]
                }
                InterpMethod::Bilinear => {
                    let src = center.max(0.0);
                    let i0 = src.floor() as isize;
                    let frac = src - i0 as f64;
                    vec![(clampi(i0), 1.0 - frac), (clampi(i0 + 1), frac)]
                }
                InterpMethod::Bicubic => {
                    let i0 = center.floor() as isize;
                    let frac = center - i0 as f64;
                    (-1..=2)
                        .map(|d| (clampi(i0 + d), cubic_weight(frac - d as f64)))
                        .collect()
                }
                InterpMethod::Area => {
                    let lo = o as f64 * scale;
                    let hi = (o as f64 + 1.0) * scale;
                    let first = lo.floor() as usize;
                    let end = (hi.ceil() as usize).min(n_in);
                    (first..end)
                        .filter_map(|i| {
                            let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                            (overlap > 0.0).then_some((i, overlap / scale))
                        })
                        .collect()
                }
            }
        })
        .collect()
}

/// Resamples to `out_h × out_w` using half-pixel (align-corners = false) coordinates.
///
/// Output is clamped to `[0, 1]`.
pub fn resample(
    img: &ImageTensor,
    out_h: usize,
    out_w: usize,
    method: InterpMethod,
) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::ImageTooSmall(format!(
            "resample target {out_h}x{out_w}"
        )));
    }
    let (c, h, w) = img.shape();
    let rows = axis_taps(h, out_h, method);
    let cols = axis_taps(w, out_w, method);
    let mut tmp = vec![0.0f64; h * out_w];
    let mut out = ImageTensor::zeros(c, out_h, out_w);
    for ch in 0..c {
        let src = img.channel(ch);
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for (x, taps) in cols.iter().enumerate() {
                tmp[y * out_w + x] = taps.iter().map(|&(i, wt)| row[i] as f64 * wt).sum();
            }
        }
        let dst = out.channel_mut(ch);
        for (y, taps) in rows.iter().enumerate() {
            for x in 0..out_w {
                let v: f64 = taps.iter().map(|&(i, wt)| tmp[i * out_w + x] * wt).sum();
                dst[y * out_w + x] = v.clamp(0.0, 1.0) as f32;
            }
        }
    }
    Ok(out)
}

/// Per-channel `k×k` median with replicate border.
pub fn median_filter(img: &ImageTensor, k: usize) -> Result<ImageTensor> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidKernel(format!(
            "median window must be odd, got {k}"
        )));
    }
    let (c, h, w) = img.shape();
    let r = (k / 2) as isize;
    let mut out = ImageTensor::zeros(c, h, w);
    let mut window = Vec::with_capacity(k * k);
    for ch in 0..c {
        let src = img.channel(ch);
        let dst = out.channel_mut(ch);
        for y in 0..h {
            for x in 0..w {
                window.clear();
                for dy in -r..=r {
                    let sy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    for dx in -r..=r {
                        let sx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                        window.push(src[sy * w + sx]);
                    }
                }
                let mid = window.len() / 2;
                let (_, m, _) = window.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
                dst[y * w + x] = *m;
            }
        }
    }
    Ok(out)
}

pub fn clamp01(img: &ImageTensor) -> ImageTensor {
    img.map(|v| v.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn random_image(rng: &mut RngStream, c: usize, h: usize, w: usize) -> ImageTensor {
        ImageTensor::from_fn(c, h, w, |_, _, _| rng.next_f64() as f32)
    }

    fn random_kernel(rng: &mut RngStream, k: usize) -> Kernel {
        Kernel::new(k, (0..k * k).map(|_| rng.next_f64() as f32 - 0.5).collect()).unwrap()
    }

    /// Direct quadruple loop, written independently of `convolve2d`.
    fn conv_oracle(img: &ImageTensor, k: &Kernel) -> Vec<f64> {
        let (c, h, w) = img.shape();
        let r = k.radius() as i64;
        let mut out = vec![0.0; c * h * w];
        for ch in 0..c {
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    let mut s = 0.0;
                    for u in -r..=r {
                        for v in -r..=r {
                            let sy = (y - u).max(0).min(h as i64 - 1) as usize;
                            let sx = (x - v).max(0).min(w as i64 - 1) as usize;
                            let kw = k.at((u + r) as usize, (v + r) as usize) as f64;
                            s += kw * img.get(ch, sy, sx) as f64;
                        }
                    }
                    out[(ch * h + y as usize) * w + x as usize] = s;
                }
            }
        }
        out
    }

    #[test]
    fn identity_kernel_leaves_image_unchanged() {
        let mut rng = RngStream::new(1);
        let img = random_image(&mut rng, 3, 7, 5);
        for border in [BorderMode::Replicate, BorderMode::Reflect, BorderMode::Zero] {
            let out = convolve2d(&img, &Kernel::identity(), border).unwrap();
            assert_eq!(out, img);
        }
    }

    #[test]
    fn constant_is_fixed_point_of_smoothing() {
        let img = ImageTensor::filled(2, 9, 9, 0.37);
        let k = Kernel::new(3, vec![1.0 / 9.0; 9]).unwrap();
        let out = convolve2d(&img, &k, BorderMode::Replicate).unwrap();
        for &v in out.data() {
            assert!((v - 0.37).abs() < 1e-6);
        }
    }

    #[test]
    fn convolution_matches_direct_loop() {
        let mut rng = RngStream::new(7);
        let img = random_image(&mut rng, 5, 16, 16);
        let k = random_kernel(&mut rng, 3);
        let out = convolve2d(&img, &k, BorderMode::Replicate).unwrap();
        for (a, b) in out.data().iter().zip(conv_oracle(&img, &k)) {
            assert!((*a as f64 - b).abs() < 1e-6);
        }
    }

    #[test]
    fn convolution_is_true_convolution() {
        // Asymmetric kernel on an impulse reproduces the kernel itself.
        let mut img = ImageTensor::zeros(1, 5, 5);
        img.set(0, 2, 2, 1.0);
        let k = Kernel::new(3, (1..=9).map(|v| v as f32).collect()).unwrap();
        let out = convolve2d(&img, &k, BorderMode::Zero).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(out.get(0, 1 + r, 1 + c), k.at(r, c));
            }
        }
    }

    #[test]
    fn even_kernel_rejected() {
        assert!(matches!(
            Kernel::new(2, vec![0.25; 4]),
            Err(Error::InvalidKernel(_))
        ));
        let img = ImageTensor::zeros(1, 4, 4);
        assert!(matches!(
            median_filter(&img, 4),
            Err(Error::InvalidKernel(_))
        ));
    }

    #[test]
    fn reflect_border_indices() {
        let idx: Vec<_> = (-3..7)
            .map(|i| border_index(i, 4, BorderMode::Reflect).unwrap())
            .collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(border_index(-1, 4, BorderMode::Zero), None);
        assert_eq!(border_index(9, 4, BorderMode::Replicate), Some(3));
    }

    #[test]
    fn resample_constant_to_single_pixel() {
        let img = ImageTensor::filled(1, 2, 2, 0.7);
        for m in InterpMethod::ALL {
            let out = resample(&img, 1, 1, m).unwrap();
            assert!((out.get(0, 0, 0) - 0.7).abs() < 1e-6, "{m:?}");
        }
    }

    #[test]
    fn area_of_checker_is_half() {
        let img = ImageTensor::from_vec(1, 2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let out = resample(&img, 1, 1, InterpMethod::Area).unwrap();
        assert_eq!(out.get(0, 0, 0), 0.5);
    }

    fn bilinear_oracle(img: &ImageTensor, oh: usize, ow: usize, y: usize, x: usize) -> f64 {
        let (_, h, w) = img.shape();
        let sy = ((y as f64 + 0.5) * h as f64 / oh as f64 - 0.5).max(0.0);
        let sx = ((x as f64 + 0.5) * w as f64 / ow as f64 - 0.5).max(0.0);
        let y0 = sy.floor() as usize;
        let x0 = sx.floor() as usize;
        let y1 = (y0 + 1).min(h - 1);
        let x1 = (x0 + 1).min(w - 1);
        let fy = sy - y0 as f64;
        let fx = sx - x0 as f64;
        let p = |yy, xx| img.get(0, yy, xx) as f64;
        (1.0 - fy) * ((1.0 - fx) * p(y0, x0) + fx * p(y0, x1))
            + fy * ((1.0 - fx) * p(y1, x0) + fx * p(y1, x1))
    }

    #[test]
    fn bilinear_ramp_matches_scalar_oracle() {
        let img = ImageTensor::from_fn(1, 4, 4, |_, y, x| (y * 4 + x) as f32 / 15.0);
        let out = resample(&img, 8, 8, InterpMethod::Bilinear).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                let want = bilinear_oracle(&img, 8, 8, y, x);
                assert!((out.get(0, y, x) as f64 - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn bicubic_identity_at_same_size() {
        let mut rng = RngStream::new(3);
        let img = random_image(&mut rng, 2, 6, 9);
        let out = resample(&img, 6, 9, InterpMethod::Bicubic).unwrap();
        for (a, b) in out.data().iter().zip(img.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn median_of_single_impulse_is_zero() {
        let mut img = ImageTensor::zeros(1, 3, 3);
        img.set(0, 1, 1, 1.0);
        let out = median_filter(&img, 3).unwrap();
        assert_eq!(out.get(0, 1, 1), 0.0);
    }

    #[test]
    fn median_matches_window_sort_oracle() {
        let mut rng = RngStream::new(11);
        let img = random_image(&mut rng, 3, 9, 9);
        let out = median_filter(&img, 5).unwrap();
        for c in 0..3 {
            for y in 0..9i64 {
                for x in 0..9i64 {
                    let mut win = Vec::new();
                    for dy in -2..=2i64 {
                        for dx in -2..=2i64 {
                            let sy = (y + dy).clamp(0, 8) as usize;
                            let sx = (x + dx).clamp(0, 8) as usize;
                            win.push(img.get(c, sy, sx));
                        }
                    }
                    win.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    assert_eq!(out.get(c, y as usize, x as usize), win[12]);
                }
            }
        }
    }

    #[test]
    fn clamp_definition() {
        let img = ImageTensor::from_vec(1, 1, 3, vec![1.2, -0.1, 0.5]).unwrap();
        assert_eq!(clamp01(&img).data(), &[1.0, 0.0, 0.5]);
    }

    #[test]
    fn rotations_form_cycle() {
        let mut rng = RngStream::new(5);
        let img = random_image(&mut rng, 2, 3, 5);
        let mut r = img.clone();
        for _ in 0..4 {
            r = r.rot90(1);
        }
        assert_eq!(r, img);
        assert_eq!(img.rot90(2), img.flip_h().flip_v());
        assert_eq!(img.rot90(1).shape(), (2, 5, 3));
        assert_eq!(img.rot90(3), img.rot90(1).rot90(2));
    }

    proptest! {
        #[test]
        fn convolution_is_linear(seed in any::<u64>(), a in -2.0f32..2.0, b in -2.0f32..2.0) {
            let mut rng = RngStream::new(seed);
            let x = random_image(&mut rng, 2, 6, 7);
            let y = random_image(&mut rng, 2, 6, 7);
            let k = random_kernel(&mut rng, 5);
            let combo = ImageTensor::from_vec(2, 6, 7,
                x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect()).unwrap();
            let lhs = convolve2d(&combo, &k, BorderMode::Replicate).unwrap();
            let cx = convolve2d(&x, &k, BorderMode::Replicate).unwrap();
            let cy = convolve2d(&y, &k, BorderMode::Replicate).unwrap();
            for i in 0..lhs.len() {
                let rhs = a * cx.data()[i] + b * cy.data()[i];
                prop_assert!((lhs.data()[i] - rhs).abs() < 1e-5);
            }
        }

        #[test]
        fn nearest_same_size_is_bit_identical(seed in any::<u64>(), h in 1usize..12, w in 1usize..12) {
            let mut rng = RngStream::new(seed);
            let img = random_image(&mut rng, 2, h, w);
            prop_assert_eq!(resample(&img, h, w, InterpMethod::Nearest).unwrap(), img);
        }

        #[test]
        fn median_commutes_with_channel_permutation(seed in any::<u64>()) {
            let mut rng = RngStream::new(seed);
            let img = random_image(&mut rng, 3, 6, 6);
            let swapped = ImageTensor::concat(&[&img.band(2), &img.band(0), &img.band(1)]).unwrap();
            let a = median_filter(&img, 3).unwrap();
            let b = median_filter(&swapped, 3).unwrap();
            prop_assert_eq!(b.channel(0), a.channel(2));
            prop_assert_eq!(b.channel(1), a.channel(0));
            prop_assert_eq!(b.channel(2), a.channel(1));
        }

        #[test]
        fn median_idempotent_on_constants(v in 0.0f32..1.0) {
            let img = ImageTensor::filled(2, 5, 5, v);
            prop_assert_eq!(median_filter(&median_filter(&img, 3).unwrap(), 5).unwrap(), img);
        }
    }
}
