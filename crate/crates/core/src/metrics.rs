//! Reduced-resolution (reference-based) and full-resolution (no-reference) quality indices.
//!
//! All inputs are expected in `[0, 1]`. Every function is total: degenerate
//! pixels, bands, and windows are skipped or contribute zero as documented.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ImageTensor;

pub const PSNR_CAP: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const Q_WINDOW: usize = 32;
const EPS: f64 = 1e-8;

fn check_same(a: &ImageTensor, b: &ImageTensor) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::ShapeError(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )))
    }
}

pub fn mse(pred: &ImageTensor, gt: &ImageTensor) -> Result<f64> {
    check_same(pred, gt)?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&p, &g)| (p as f64 - g as f64).powi(2))
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Peak signal-to-noise ratio in dB for unit dynamic range, capped at [`PSNR_CAP`].
pub fn psnr(pred: &ImageTensor, gt: &ImageTensor) -> Result<f64> {
    let m = mse(pred, gt)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP))
}

pub fn mae(pred: &ImageTensor, gt: &ImageTensor) -> Result<f64> {
    check_same(pred, gt)?;
    let sum: f64 = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(&p, &g)| (p as f64 - g as f64).abs())
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Normalized 1-D Gaussian taps.
fn gaussian_taps(k: usize, sigma: f64) -> Vec<f64> {
    let r = (k / 2) as f64;
    let raw: Vec<f64> = (0..k)
        .map(|i| (-((i as f64 - r).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Window size used for an `h × w` image: 11, or the largest odd size that fits.
pub fn ssim_window(h: usize, w: usize) -> usize {
    let m = h.min(w).min(SSIM_WINDOW);
    if m % 2 == 0 {
        m - 1
    } else {
        m
    }
}

/// Separable "valid" filtering of an `h × w` plane.
fn filter_valid(src: &[f64], h: usize, w: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (oh, ow) = (h - k + 1, w - k + 1);
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..k).map(|t| taps[t] * src[y * w + x + t]).sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..k).map(|t| taps[t] * rows[(y + t) * ow + x]).sum();
        }
    }
    out
}

fn ssim_plane(a: &[f32], b: &[f32], h: usize, w: usize, taps: &[f64]) -> f64 {
    const C1: f64 = 0.01 * 0.01;
    const C2: f64 = 0.03 * 0.03;
    let x: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(&x, h, w, taps);
    let my = filter_valid(&y, h, w, taps);
    let sxx = filter_valid(&xx, h, w, taps);
    let syy = filter_valid(&yy, h, w, taps);
    let sxy = filter_valid(&xy, h, w, taps);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cxy = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + C1) * (2.0 * cxy + C2)) / ((ux * ux + uy * uy + C1) * (vx + vy + C2));
    }
    total / mx.len() as f64
}

/// Mean over bands of Gaussian-windowed SSIM (σ = 1.5, valid windows only).
pub fn ssim(pred: &ImageTensor, gt: &ImageTensor) -> Result<f64> {
    check_same(pred, gt)?;
    let (c, h, w) = pred.shape();
    let taps = gaussian_taps(ssim_window(h, w), SSIM_SIGMA);
    let total: f64 = (0..c)
        .map(|b| ssim_plane(pred.channel(b), gt.channel(b), h, w, &taps))
        .sum();
    Ok(total / c as f64)
}

/// Mean spectral angle in radians over pixels where both vectors are non-zero.
pub fn sam(pred: &ImageTensor, gt: &ImageTensor) -> Result<f64> {
    check_same(pred, gt)?;
    let (c, _, _) = pred.shape();
    let n = pred.plane_len();
    let (p, g) = (pred.data(), gt.data());
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        let (mut pp, mut gg) = (0.0f64, 0.0f64);
        for b in 0..c {
            let (u, v) = (p[b * n + i] as f64, g[b * n + i] as f64);
            pp += u * u;
            gg += v * v;
        }
        let (np, ng) = (pp.sqrt(), gg.sqrt());
        if np <= EPS || ng <= EPS {
            continue;
        }
        // 2·atan2(|p̂ − ĝ|, |p̂ + ĝ|) stays accurate near 0 and π, unlike acos.
        let (mut diff, mut sum) = (0.0f64, 0.0f64);
        for b in 0..c {
            let (u, v) = (p[b * n + i] as f64 / np, g[b * n + i] as f64 / ng);
            diff += (u - v) * (u - v);
            sum += (u + v) * (u + v);
        }
        total += 2.0 * diff.sqrt().atan2(sum.sqrt());
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// ERGAS with resolution ratio `ratio` (e.g. 4 for a 4× protocol).
pub fn ergas(pred: &ImageTensor, gt: &ImageTensor, ratio: f64) -> Result<f64> {
    check_same(pred, gt)?;
    let mut acc = 0.0;
    let mut bands = 0usize;
    for b in 0..pred.channels() {
        let mu = gt.channel_mean(b);
        if mu < EPS {
            continue;
        }
        let n = pred.plane_len() as f64;
        let se: f64 = pred
            .channel(b)
            .iter()
            .zip(gt.channel(b))
            .map(|(&p, &g)| (p as f64 - g as f64).powi(2))
            .sum();
        acc += (se / n) / (mu * mu);
        bands += 1;
    }
    if bands == 0 {
        return Ok(0.0);
    }
    Ok(100.0 / ratio * (acc / bands as f64).sqrt())
}

fn pearson(a: &[f32], b: &[f32]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mb = b.iter().map(|&v| v as f64).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Mean Pearson correlation over bands; zero-variance bands are skipped.
pub fn cc(pred: &ImageTensor, gt: &ImageTensor) -> Result<f64> {
    check_same(pred, gt)?;
    let vals: Vec<f64> = (0..pred.channels())
        .filter_map(|b| pearson(pred.channel(b), gt.channel(b)))
        .collect();
    Ok(if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    })
}

/// Universal image quality index on one tile; zero when the denominator vanishes.
fn q_tile(a: &[f32], b: &[f32], w: usize, y0: usize, x0: usize, size: usize) -> f64 {
    let n = (size * size) as f64;
    let (mut sa, mut sb) = (0.0f64, 0.0f64);
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            sa += a[y * w + x] as f64;
            sb += b[y * w + x] as f64;
        }
    }
    let (ma, mb) = (sa / n, sb / n);
    let (mut vaa, mut vbb, mut vab) = (0.0, 0.0, 0.0);
    for y in y0..y0 + size {
        for x in x0..x0 + size {
            let da = a[y * w + x] as f64 - ma;
            let db = b[y * w + x] as f64 - mb;
            vaa += da * da;
            vbb += db * db;
            vab += da * db;
        }
    }
    let (vaa, vbb, vab) = (vaa / n, vbb / n, vab / n);
    let den = (vaa + vbb) * (ma * ma + mb * mb);
    if den == 0.0 {
        0.0
    } else {
        4.0 * vab * ma * mb / den
    }
}

fn q_plane(a: &[f32], b: &[f32], h: usize, w: usize, window: usize) -> f64 {
    let size = window.min(h).min(w).max(1);
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in (0..=h - size).step_by(size) {
        for x0 in (0..=w - size).step_by(size) {
            total += q_tile(a, b, w, y0, x0, size);
            count += 1;
        }
    }
    total / count as f64
}

/// Q-index of two single-band images over non-overlapping `window × window`
/// tiles. Images smaller than the window use one tile of the largest square that fits.
pub fn q_index(a: &ImageTensor, b: &ImageTensor, window: usize) -> Result<f64> {
    check_same(a, b)?;
    if a.channels() != 1 {
        return Err(Error::ShapeError(format!(
            "Q-index takes single-band images, got {}",
            a.channels()
        )));
    }
    Ok(q_plane(a.data(), b.data(), a.height(), a.width(), window))
}

/// Tile size at a lower resolution so tiles cover the same ground footprint.
fn scaled_window(window: usize, low: usize, high: usize) -> usize {
    ((window as f64 * low as f64 / high as f64).round() as usize).max(1)
}

/// Spectral distortion: mean inter-band Q discrepancy between fused and LRMS (p = 1).
pub fn d_lambda(fused: &ImageTensor, lrms: &ImageTensor) -> Result<f64> {
    let c = fused.channels();
    if c < 2 {
        return Err(Error::NotApplicable(
            "spectral distortion needs at least two bands".into(),
        ));
    }
    if lrms.channels() != c {
        return Err(Error::ShapeError(format!(
            "fused has {c} bands, LRMS {}",
            lrms.channels()
        )));
    }
    let (h, w) = (fused.height(), fused.width());
    let (lh, lw) = (lrms.height(), lrms.width());
    let lw_window = scaled_window(Q_WINDOW, lh, h);
    let mut total = 0.0;
    for i in 0..c {
        for j in i + 1..c {
            let qf = q_plane(fused.channel(i), fused.channel(j), h, w, Q_WINDOW);
            let ql = q_plane(lrms.channel(i), lrms.channel(j), lh, lw, lw_window);
            total += 2.0 * (qf - ql).abs();
        }
    }
    Ok(total / (c * (c - 1)) as f64)
}

/// Spatial distortion: mean per-band discrepancy of Q against PAN across scales (q = 1).
pub fn d_s(fused: &ImageTensor, pan: &ImageTensor, lrms: &ImageTensor, lrpan: &ImageTensor) -> Result<f64> {
    let c = fused.channels();
    if lrms.channels() != c || pan.channels() != 1 || lrpan.channels() != 1 {
        return Err(Error::ShapeError("band counts do not line up".into()));
    }
    if (fused.height(), fused.width()) != (pan.height(), pan.width())
        || (lrms.height(), lrms.width()) != (lrpan.height(), lrpan.width())
    {
        return Err(Error::ShapeError("fused/PAN or LRMS/LRPAN sizes differ".into()));
    }
    let (h, w) = (fused.height(), fused.width());
    let (lh, lw) = (lrms.height(), lrms.width());
    let lw_window = scaled_window(Q_WINDOW, lh, h);
    let mut total = 0.0;
    for i in 0..c {
        let qh = q_plane(fused.channel(i), pan.data(), h, w, Q_WINDOW);
        let ql = q_plane(lrms.channel(i), lrpan.data(), lh, lw, lw_window);
        total += (qh - ql).abs();
    }
    Ok(total / c as f64)
}

pub fn qnr(d_lambda: f64, d_s: f64) -> f64 {
    (1.0 - d_lambda) * (1.0 - d_s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Reduced,
    Full,
}

pub const REDUCED_METRICS: [&str; 6] = ["psnr", "sam", "ergas", "cc", "ssim", "mae"];
pub const FULL_METRICS: [&str; 3] = ["d_lambda", "d_s", "qnr"];

impl Resolution {
    pub fn metric_names(self) -> &'static [&'static str] {
        match self {
            Resolution::Reduced => &REDUCED_METRICS,
            Resolution::Full => &FULL_METRICS,
        }
    }
}

/// Values in [`REDUCED_METRICS`] order.
pub fn reduced_metrics(pred: &ImageTensor, gt: &ImageTensor, ratio: f64) -> Result<Vec<f64>> {
    Ok(vec![
        psnr(pred, gt)?,
        sam(pred, gt)?,
        ergas(pred, gt, ratio)?,
        cc(pred, gt)?,
        ssim(pred, gt)?,
        mae(pred, gt)?,
    ])
}

/// Values in [`FULL_METRICS`] order.
pub fn full_metrics(
    fused: &ImageTensor,
    pan: &ImageTensor,
    lrms: &ImageTensor,
    lrpan: &ImageTensor,
) -> Result<Vec<f64>> {
    let dl = d_lambda(fused, lrms)?;
    let ds = d_s(fused, pan, lrms, lrpan)?;
    Ok(vec![dl, ds, qnr(dl, ds)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub values: Vec<f64>,
}

/// Per-image metric values plus their means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub resolution: Resolution,
    pub metrics: Vec<String>,
    pub records: Vec<ImageRecord>,
    pub means: Vec<f64>,
}

impl MetricReport {
    pub fn new(resolution: Resolution) -> Self {
        let metrics: Vec<String> = resolution.metric_names().iter().map(|s| s.to_string()).collect();
        let means = vec![0.0; metrics.len()];
        Self {
            resolution,
            metrics,
            records: Vec::new(),
            means,
        }
    }

    pub fn push(&mut self, id: impl Into<String>, values: Vec<f64>) {
        assert_eq!(values.len(), self.metrics.len(), "metric count");
        self.records.push(ImageRecord {
            id: id.into(),
            values,
        });
        let n = self.records.len() as f64;
        for (k, m) in self.means.iter_mut().enumerate() {
            *m = self.records.iter().map(|r| r.values[k]).sum::<f64>() / n;
        }
    }

    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.metrics
            .iter()
            .position(|m| m == metric)
            .map(|i| self.means[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn random(seed: u64, c: usize, h: usize, w: usize) -> ImageTensor {
        let mut rng = RngStream::new(seed);
        ImageTensor::from_fn(c, h, w, |_, _, _| rng.next_f64() as f32)
    }

    #[test]
    fn ideal_values() {
        let img = random(1, 4, 16, 16);
        assert_eq!(psnr(&img, &img).unwrap(), 100.0);
        assert_eq!(ssim(&img, &img).unwrap(), 1.0);
        assert_eq!(sam(&img, &img).unwrap(), 0.0);
        assert_eq!(ergas(&img, &img, 4.0).unwrap(), 0.0);
        assert_eq!(cc(&img, &img).unwrap(), 1.0);
        assert_eq!(mae(&img, &img).unwrap(), 0.0);
        assert_eq!(qnr(0.0, 0.0), 1.0);
    }

    #[test]
    fn closed_forms() {
        let zero = ImageTensor::zeros(2, 8, 8);
        let tenth = ImageTensor::filled(2, 8, 8, 0.1);
        assert!((psnr(&tenth, &zero).unwrap() - 20.0).abs() < 1e-6);
        assert!((mae(&tenth, &zero).unwrap() - 0.1).abs() < 1e-7);
        let gt = ImageTensor::filled(1, 8, 8, 0.5);
        let pred = gt.map(|v| v + 0.1);
        assert!((ergas(&pred, &gt, 4.0).unwrap() - 5.0).abs() < 1e-5);
        assert_eq!(qnr(1.0, 0.3), 0.0);
        assert!((qnr(0.1, 0.2) - 0.72).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_spectra_give_right_angle() {
        let a = ImageTensor::from_fn(2, 3, 3, |c, _, _| if c == 0 { 1.0 } else { 0.0 });
        let b = ImageTensor::from_fn(2, 3, 3, |c, _, _| if c == 1 { 1.0 } else { 0.0 });
        assert!((sam(&a, &b).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        // All-zero pixels are skipped.
        let z = ImageTensor::zeros(2, 3, 3);
        assert_eq!(sam(&z, &b).unwrap(), 0.0);
    }

    #[test]
    fn inverted_binary_image_has_negative_ssim() {
        let gt = ImageTensor::from_fn(1, 16, 16, |_, y, x| ((x / 2 + y / 2) % 2) as f32);
        let inv = gt.map(|v| 1.0 - v);
        assert!(ssim(&gt, &inv).unwrap() < 0.0);
        assert!((cc(&inv, &gt).unwrap() + 1.0).abs() < 1e-12);
    }

    fn ssim_oracle(a: &ImageTensor, b: &ImageTensor) -> f64 {
        let (c, h, w) = a.shape();
        let k = ssim_window(h, w);
        let r = (k / 2) as f64;
        let mut win = vec![0.0f64; k * k];
        for i in 0..k {
            for j in 0..k {
                win[i * k + j] = (-((i as f64 - r).powi(2) + (j as f64 - r).powi(2)) / (2.0 * 1.5 * 1.5)).exp();
            }
        }
        let s: f64 = win.iter().sum();
        win.iter_mut().for_each(|v| *v /= s);
        let mut total = 0.0;
        for ch in 0..c {
            let mut acc = 0.0;
            let mut n = 0;
            for y in 0..=h - k {
                for x in 0..=w - k {
                    let (mut mx, mut my) = (0.0, 0.0);
                    for i in 0..k {
                        for j in 0..k {
                            mx += win[i * k + j] * a.get(ch, y + i, x + j) as f64;
                            my += win[i * k + j] * b.get(ch, y + i, x + j) as f64;
                        }
                    }
                    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
                    for i in 0..k {
                        for j in 0..k {
                            let dx = a.get(ch, y + i, x + j) as f64 - mx;
                            let dy = b.get(ch, y + i, x + j) as f64 - my;
                            vx += win[i * k + j] * dx * dx;
                            vy += win[i * k + j] * dy * dy;
                            cxy += win[i * k + j] * dx * dy;
                        }
                    }
                    let (c1, c2) = (1e-4, 9e-4);
                    acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                    n += 1;
                }
            }
            total += acc / n as f64;
        }
        total / c as f64
    }

    #[test]
    fn ssim_matches_direct_windows() {
        for (seed, h, w) in [(2, 16, 16), (3, 12, 19), (4, 7, 9), (5, 4, 4)] {
            let a = random(seed, 2, h, w);
            let b = random(seed + 100, 2, h, w);
            let got = ssim(&a, &b).unwrap();
            let want = ssim_oracle(&a, &b);
            assert!((got - want).abs() < 1e-5, "{h}x{w}: {got} vs {want}");
        }
    }

    #[test]
    fn q_index_cases() {
        let a = random(6, 1, 40, 40);
        assert!((q_index(&a, &a, 32).unwrap() - 1.0).abs() < 1e-12);
        let flat = ImageTensor::filled(1, 40, 40, 0.4);
        assert_eq!(q_index(&flat, &a, 32).unwrap(), 0.0);
        assert_eq!(q_index(&flat, &flat, 32).unwrap(), 0.0);
        // Smaller than the window: one tile over the whole image.
        let s = random(7, 1, 10, 12);
        let t = random(8, 1, 10, 12);
        let whole = q_index(&s, &t, 32).unwrap();
        assert!((whole - q_tile(s.data(), t.data(), 12, 0, 0, 10)).abs() < 1e-15);
    }

    #[test]
    fn d_lambda_of_nearest_upsampling_is_zero() {
        let lrms = random(9, 3, 16, 16);
        let fused = crate::tensor::resample(&lrms, 64, 64, crate::tensor::InterpMethod::Nearest).unwrap();
        assert!(d_lambda(&fused, &lrms).unwrap() < 0.02);
        let single = random(10, 1, 16, 16);
        assert!(matches!(
            d_lambda(&single, &single),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn d_s_zero_when_bands_equal_pan() {
        let pan = random(11, 1, 64, 64);
        let lrpan = random(12, 1, 16, 16);
        let fused = ImageTensor::concat(&[&pan, &pan, &pan]).unwrap();
        let lrms = ImageTensor::concat(&[&lrpan, &lrpan, &lrpan]).unwrap();
        assert!(d_s(&fused, &pan, &lrms, &lrpan).unwrap().abs() < 1e-12);
    }

    #[test]
    fn report_means() {
        let mut r = MetricReport::new(Resolution::Full);
        r.push("a", vec![0.1, 0.2, 0.72]);
        r.push("b", vec![0.3, 0.0, 0.7]);
        assert_eq!(r.count(), 2);
        assert!((r.mean("d_lambda").unwrap() - 0.2).abs() < 1e-12);
        assert!(r.mean("psnr").is_none());
    }

    proptest! {
        #[test]
        fn symmetric_metrics(seed in 0u64..1000) {
            let a = random(seed, 3, 12, 12);
            let b = random(seed + 7919, 3, 12, 12);
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
            prop_assert_eq!(mae(&a, &b).unwrap(), mae(&b, &a).unwrap());
            prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-7);
        }

        #[test]
        fn sam_is_scale_invariant(seed in 0u64..1000, s in 0.2f32..0.9) {
            let a = random(seed, 4, 6, 6);
            let b = random(seed + 1, 4, 6, 6);
            let scaled = a.map(|v| v * s);
            prop_assert!((sam(&a, &b).unwrap() - sam(&scaled, &b).unwrap()).abs() < 1e-6);
        }

        #[test]
        fn index_ranges(seed in 0u64..1000) {
            let fused = random(seed, 3, 32, 32);
            let pan = random(seed + 1, 1, 32, 32);
            let lrms = random(seed + 2, 3, 8, 8);
            let lrpan = random(seed + 3, 1, 8, 8);
            let dl = d_lambda(&fused, &lrms).unwrap();
            let ds = d_s(&fused, &pan, &lrms, &lrpan).unwrap();
            prop_assert!((0.0..=1.0).contains(&dl));
            prop_assert!((0.0..=1.0).contains(&ds));
            let q = qnr(dl, ds);
            prop_assert!((0.0..=1.0).contains(&q));
            prop_assert!(qnr((dl + 0.1).min(1.0), ds) <= q);
            let s = ssim(&fused, &random(seed + 4, 3, 32, 32)).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!(sam(&fused, &random(seed + 5, 3, 32, 32)).unwrap() >= 0.0);
        }
    }
}
