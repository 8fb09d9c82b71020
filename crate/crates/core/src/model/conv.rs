//! 3×3 stride-1 convolution with replicate padding, lowered to GEMM via im2col.

use matrixmultiply::sgemm;

pub const K: usize = 3;
pub const TAPS: usize = K * K;

/// Replicate-padded copy of a `c×h×w` buffer, one pixel on every side.
fn pad_replicate(src: &[f32], c: usize, h: usize, w: usize) -> Vec<f32> {
    let (ph, pw) = (h + 2, w + 2);
    let mut out = vec![0.0; c * ph * pw];
    for ch in 0..c {
        let plane = &src[ch * h * w..(ch + 1) * h * w];
        let dst = &mut out[ch * ph * pw..(ch + 1) * ph * pw];
        for py in 0..ph {
            let sy = py.saturating_sub(1).min(h - 1);
            let row = &plane[sy * w..(sy + 1) * w];
            let drow = &mut dst[py * pw..(py + 1) * pw];
            drow[1..w + 1].copy_from_slice(row);
            drow[0] = row[0];
            drow[w + 1] = row[w - 1];
        }
    }
    out
}

/// `[c·9, h·w]` patch matrix; row `ci·9 + ky·3 + kx` holds the input shifted by `(ky-1, kx-1)`.
pub fn im2col(src: &[f32], c: usize, h: usize, w: usize) -> Vec<f32> {
    let padded = pad_replicate(src, c, h, w);
    let (ph, pw) = (h + 2, w + 2);
    let n = h * w;
    let mut col = vec![0.0; c * TAPS * n];
    for ch in 0..c {
        let plane = &padded[ch * ph * pw..(ch + 1) * ph * pw];
        for ky in 0..K {
            for kx in 0..K {
                let row = (ch * TAPS + ky * K + kx) * n;
                for y in 0..h {
                    let s = (y + ky) * pw + kx;
                    col[row + y * w..row + (y + 1) * w].copy_from_slice(&plane[s..s + w]);
                }
            }
        }
    }
    col
}

/// Adjoint of [`im2col`]: scatters patch gradients back onto the unpadded input.
pub fn col2im(dcol: &[f32], c: usize, h: usize, w: usize) -> Vec<f32> {
    let (ph, pw) = (h + 2, w + 2);
    let n = h * w;
    let mut padded = vec![0.0f32; c * ph * pw];
    for ch in 0..c {
        let plane = &mut padded[ch * ph * pw..(ch + 1) * ph * pw];
        for ky in 0..K {
            for kx in 0..K {
                let row = (ch * TAPS + ky * K + kx) * n;
                for y in 0..h {
                    let s = (y + ky) * pw + kx;
                    let src = &dcol[row + y * w..row + (y + 1) * w];
                    for (d, g) in plane[s..s + w].iter_mut().zip(src) {
                        *d += g;
                    }
                }
            }
        }
    }
    // Padding pixels replicate their nearest edge pixel, so their gradient folds back there.
    let mut out = vec![0.0f32; c * n];
    for ch in 0..c {
        let plane = &padded[ch * ph * pw..(ch + 1) * ph * pw];
        let dst = &mut out[ch * n..(ch + 1) * n];
        for py in 0..ph {
            let sy = py.saturating_sub(1).min(h - 1);
            for px in 0..pw {
                let sx = px.saturating_sub(1).min(w - 1);
                dst[sy * w + sx] += plane[py * pw + px];
            }
        }
    }
    out
}

/// `out[co, p] = bias[co] + Σ_r weight[co, r] · col[r, p]`.
pub fn forward(weight: &[f32], bias: &[f32], col: &[f32], out_ch: usize, n: usize) -> Vec<f32> {
    let k = weight.len() / out_ch;
    let mut out = vec![0.0f32; out_ch * n];
    for (co, b) in bias.iter().enumerate() {
        out[co * n..(co + 1) * n].fill(*b);
    }
    // SAFETY: the three buffers hold out_ch·k, k·n and out_ch·n elements, matching the strides.
    unsafe {
        sgemm(
            out_ch,
            k,
            n,
            1.0,
            weight.as_ptr(),
            k as isize,
            1,
            col.as_ptr(),
            n as isize,
            1,
            1.0,
            out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    out
}

/// Accumulates weight/bias gradients; returns the patch-matrix gradient when `want_dcol`.
pub fn backward(
    weight: &[f32],
    col: &[f32],
    dout: &[f32],
    out_ch: usize,
    n: usize,
    dweight: &mut [f32],
    dbias: &mut [f32],
    want_dcol: bool,
) -> Option<Vec<f32>> {
    let k = weight.len() / out_ch;
    for (co, db) in dbias.iter_mut().enumerate() {
        *db += dout[co * n..(co + 1) * n].iter().map(|&v| v as f64).sum::<f64>() as f32;
    }
    // SAFETY: dweight is out_ch·k, dout is out_ch·n, col is k·n; strides below index within those.
    unsafe {
        // dW[out_ch, k] += dout[out_ch, n] · colᵀ[n, k]
        sgemm(
            out_ch,
            n,
            k,
            1.0,
            dout.as_ptr(),
            n as isize,
            1,
            col.as_ptr(),
            1,
            n as isize,
            1.0,
            dweight.as_mut_ptr(),
            k as isize,
            1,
        );
    }
    if !want_dcol {
        return None;
    }
    let mut dcol = vec![0.0f32; k * n];
    // SAFETY: dcol is k·n, weight is out_ch·k read transposed, dout is out_ch·n.
    unsafe {
        // dcol[k, n] = Wᵀ[k, out_ch] · dout[out_ch, n]
        sgemm(
            k,
            out_ch,
            n,
            1.0,
            weight.as_ptr(),
            1,
            k as isize,
            dout.as_ptr(),
            n as isize,
            1,
            0.0,
            dcol.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    Some(dcol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)> for random x, y.
        let mut rng = RngStream::new(1);
        let (c, h, w) = (2, 4, 5);
        let x: Vec<f32> = (0..c * h * w).map(|_| rng.next_f64() as f32).collect();
        let y: Vec<f32> = (0..c * TAPS * h * w).map(|_| rng.next_f64() as f32).collect();
        let lhs: f64 = im2col(&x, c, h, w)
            .iter()
            .zip(&y)
            .map(|(a, b)| *a as f64 * *b as f64)
            .sum();
        let rhs: f64 = x
            .iter()
            .zip(col2im(&y, c, h, w))
            .map(|(a, b)| *a as f64 * b as f64)
            .sum();
        assert!((lhs - rhs).abs() < 1e-4 * lhs.abs().max(1.0));
    }

    #[test]
    fn single_pixel_image() {
        let col = im2col(&[0.25], 1, 1, 1);
        assert_eq!(col, vec![0.25; 9]);
        let back = col2im(&[1.0; 9], 1, 1, 1);
        assert_eq!(back, vec![9.0]);
    }
}
