//! PAN-only high-pass filters: Laplacian, difference of Gaussians, Sobel, Canny.

use serde::{Deserialize, Serialize};

use crate::degradation::gaussian_kernel;
use crate::error::Result;
use crate::tensor::{clamp01, convolve2d, BorderMode, ImageTensor, Kernel};

pub const CANNY_LOW: f32 = 0.04;
pub const CANNY_HIGH: f32 = 0.10;

/// Largest possible Sobel gradient magnitude for `[0, 1]` data: `√(4² + 4²)`.
const SOBEL_MAX: f32 = 5.656_854_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HighPass {
    Laplacian3,
    /// `G(0.5, 3) − G(2.0, 7)`.
    Dog,
    Sobel,
    Canny { low: f32, high: f32 },
}

pub fn laplacian3() -> Kernel {
    Kernel::new(3, vec![0.0, 1.0, 0.0, 1.0, -4.0, 1.0, 0.0, 1.0, 0.0]).expect("3x3 kernel")
}

pub fn dog_kernel() -> Result<Kernel> {
    let small = gaussian_kernel(0.5, 3)?.padded_to(7)?;
    let large = gaussian_kernel(2.0, 7)?;
    small.difference(&large)
}

/// Sobel `(gx, gy)` per pixel of a single-band image, replicate border.
pub fn sobel_gradients(img: &ImageTensor) -> (Vec<f32>, Vec<f32>) {
    let (_, h, w) = img.shape();
    let src = img.channel(0);
    let at = |y: isize, x: isize| {
        let yy = y.clamp(0, h as isize - 1) as usize;
        let xx = x.clamp(0, w as isize - 1) as usize;
        src[yy * w + xx]
    };
    let mut gx = vec![0.0; h * w];
    let mut gy = vec![0.0; h * w];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(y - 1, x + 1) + 2.0 * at(y, x + 1) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y, x - 1) + at(y + 1, x - 1));
            gy[i] = (at(y + 1, x - 1) + 2.0 * at(y + 1, x) + at(y + 1, x + 1))
                - (at(y - 1, x - 1) + 2.0 * at(y - 1, x) + at(y - 1, x + 1));
        }
    }
    (gx, gy)
}

pub fn sobel_magnitude(img: &ImageTensor) -> ImageTensor {
    let (_, h, w) = img.shape();
    let (gx, gy) = sobel_gradients(img);
    let data = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| ((a * a + b * b).sqrt() / SOBEL_MAX).clamp(0.0, 1.0))
        .collect();
    ImageTensor::from_vec(1, h, w, data).expect("shape preserved")
}

/// Binary Canny edge map of a single-band image.
///
/// Gaussian presmoothing (σ = 1, 5×5), Sobel gradients with magnitude
/// normalized to `[0, 1]`, four-direction non-maximum suppression, double
/// threshold, then hysteresis by 8-connected flood fill from strong pixels.
pub fn canny(img: &ImageTensor, low: f32, high: f32) -> Result<ImageTensor> {
    let (_, h, w) = img.shape();
    let smooth = convolve2d(img, &gaussian_kernel(1.0, 5)?, BorderMode::Replicate)?;
    let (gx, gy) = sobel_gradients(&smooth);
    let mag: Vec<f32> = gx
        .iter()
        .zip(&gy)
        .map(|(a, b)| (a * a + b * b).sqrt() / SOBEL_MAX)
        .collect();

    let at = |y: isize, x: isize| -> f32 {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };

    let mut thin = vec![0.0f32; h * w];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m < low {
                continue;
            }
            let angle = gy[i].atan2(gx[i]).to_degrees().rem_euclid(180.0);
            let (dy, dx) = if !(22.5..157.5).contains(&angle) {
                (0, 1)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (1, 0)
            } else {
                (1, -1)
            };
            let (yi, xi) = (y as isize, x as isize);
            let ahead = at(yi + dy, xi + dx);
            let behind = at(yi - dy, xi - dx);
            // Ties resolve toward the pixel before the crest so plateaus stay one pixel wide.
            if m >= ahead && m > behind {
                thin[i] = m;
            }
        }
    }

    let mut out = vec![0.0f32; h * w];
    let mut stack: Vec<usize> = (0..h * w).filter(|&i| thin[i] >= high).collect();
    for &i in &stack {
        out[i] = 1.0;
    }
    while let Some(i) = stack.pop() {
        let (y, x) = ((i / w) as isize, (i % w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (ny, nx) = (y + dy, x + dx);
                if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if out[j] == 0.0 && thin[j] >= low {
                    out[j] = 1.0;
                    stack.push(j);
                }
            }
        }
    }
    ImageTensor::from_vec(1, h, w, out)
}

/// Replaces PAN by its high-pass response. Signed responses are re-centered at 0.5.
pub fn highpass_pan(pan: &ImageTensor, kind: &HighPass) -> Result<ImageTensor> {
    match kind {
        HighPass::Laplacian3 => {
            let r = convolve2d(pan, &laplacian3(), BorderMode::Replicate)?;
            Ok(clamp01(&r.map(|v| v + 0.5)))
        }
        HighPass::Dog => {
            let r = convolve2d(pan, &dog_kernel()?, BorderMode::Replicate)?;
            Ok(clamp01(&r.map(|v| v + 0.5)))
        }
        HighPass::Sobel => Ok(sobel_magnitude(pan)),
        HighPass::Canny { low, high } => canny(pan, *low, *high),
    }
}
