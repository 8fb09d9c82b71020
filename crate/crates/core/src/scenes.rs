//! Procedural RGB scenes used as stand-in corpora.
//!
//! `Generic` scenes are cluttered shapes over gradients, loosely like everyday
//! photographs. `Aerial` scenes are field parcels, roads and building blocks
//! seen from above. The two styles never share images, so one can serve as a
//! pretraining corpus and the other as an unseen evaluation domain.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{atomic_write, pnm};
use crate::rng::RngStream;
use crate::tensor::ImageTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneStyle {
    Generic,
    Aerial,
}

impl std::str::FromStr for SceneStyle {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(SceneStyle::Generic),
            "aerial" => Ok(SceneStyle::Aerial),
            other => Err(crate::error::Error::Config(format!("unknown scene style `{other}`"))),
        }
    }
}

type Rgb = [f32; 3];

struct Canvas {
    size: usize,
    px: Vec<Rgb>,
}

impl Canvas {
    fn new(size: usize) -> Self {
        Self {
            size,
            px: vec![[0.0; 3]; size * size],
        }
    }

    /// Paints `color(x, y)` wherever `inside(x, y)` holds, with 2×2 supersampled edges.
    fn paint(&mut self, inside: impl Fn(f64, f64) -> bool, color: impl Fn(f64, f64) -> Rgb) {
        const OFFS: [f64; 2] = [0.25, 0.75];
        for y in 0..self.size {
            for x in 0..self.size {
                let mut cover = 0;
                for oy in OFFS {
                    for ox in OFFS {
                        if inside(x as f64 + ox, y as f64 + oy) {
                            cover += 1;
                        }
                    }
                }
                if cover == 0 {
                    continue;
                }
                let a = cover as f32 / 4.0;
                let c = color(x as f64 + 0.5, y as f64 + 0.5);
                let p = &mut self.px[y * self.size + x];
                for k in 0..3 {
                    p[k] = (1.0 - a) * p[k] + a * c[k];
                }
            }
        }
    }

    fn into_tensor(self, rng: &mut RngStream, grain: f64) -> ImageTensor {
        let n = self.size;
        let mut t = ImageTensor::zeros(3, n, n);
        for (i, p) in self.px.iter().enumerate() {
            for k in 0..3 {
                let v = p[k] as f64 + rng.normal(0.0, grain);
                t.data_mut()[k * n * n + i] = v.clamp(0.0, 1.0) as f32;
            }
        }
        t
    }
}

fn color(rng: &mut RngStream) -> Rgb {
    [rng.next_f64() as f32, rng.next_f64() as f32, rng.next_f64() as f32]
}

fn jitter(c: Rgb, rng: &mut RngStream, amount: f64) -> Rgb {
    c.map(|v| (v as f64 + rng.normal(0.0, amount)).clamp(0.0, 1.0) as f32)
}

fn lerp(a: Rgb, b: Rgb, t: f64) -> Rgb {
    let t = t.clamp(0.0, 1.0) as f32;
    [0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * t)
}

fn generic(size: usize, rng: &mut RngStream) -> ImageTensor {
    let s = size as f64;
    let mut cv = Canvas::new(size);
    let (c0, c1) = (color(rng), color(rng));
    let ang = rng.next_f64() * std::f64::consts::TAU;
    let (dx, dy) = (ang.cos(), ang.sin());
    cv.paint(|_, _| true, |x, y| lerp(c0, c1, 0.5 + ((x - s / 2.0) * dx + (y - s / 2.0) * dy) / s));

    let shapes = 8 + rng.choice(10);
    for _ in 0..shapes {
        let base = color(rng);
        let shade = jitter(base, rng, 0.15);
        let (cx, cy) = (rng.next_f64() * s, rng.next_f64() * s);
        let r = s * (0.04 + 0.22 * rng.next_f64());
        let theta = rng.next_f64() * std::f64::consts::PI;
        let (ct, st) = (theta.cos(), theta.sin());
        let stripes = rng.bernoulli(0.3).then(|| (2.0 + 6.0 * rng.next_f64(), rng.next_f64() * 6.28));
        let fill = move |x: f64, y: f64| {
            let u = (x - cx) * ct + (y - cy) * st;
            let mut c = lerp(base, shade, 0.5 + u / (2.0 * r));
            if let Some((period, phase)) = stripes {
                let w = 0.5 + 0.5 * ((x * ct - y * st) / period + phase).sin();
                c = lerp(c, [c[0] * 0.6, c[1] * 0.6, c[2] * 0.6], w);
            }
            c
        };
        match rng.choice(3) {
            0 => {
                let aspect = 0.4 + 1.2 * rng.next_f64();
                cv.paint(
                    |x, y| {
                        let u = (x - cx) * ct + (y - cy) * st;
                        let v = -(x - cx) * st + (y - cy) * ct;
                        (u / r).powi(2) + (v / (r * aspect)).powi(2) <= 1.0
                    },
                    fill,
                );
            }
            1 => {
                let aspect = 0.3 + 1.4 * rng.next_f64();
                cv.paint(
                    |x, y| {
                        let u = (x - cx) * ct + (y - cy) * st;
                        let v = -(x - cx) * st + (y - cy) * ct;
                        u.abs() <= r && v.abs() <= r * aspect
                    },
                    fill,
                );
            }
            _ => {
                let pts: Vec<(f64, f64)> = (0..3)
                    .map(|k| {
                        let a = theta + k as f64 * 2.094 + rng.normal(0.0, 0.3);
                        (cx + r * a.cos(), cy + r * a.sin())
                    })
                    .collect();
                cv.paint(move |x, y| in_triangle(&pts, x, y), fill);
            }
        }
    }
    cv.into_tensor(rng, 0.01)
}

fn in_triangle(p: &[(f64, f64)], x: f64, y: f64) -> bool {
    let side = |a: (f64, f64), b: (f64, f64)| (b.0 - a.0) * (y - a.1) - (b.1 - a.1) * (x - a.0);
    let (d0, d1, d2) = (side(p[0], p[1]), side(p[1], p[2]), side(p[2], p[0]));
    (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0) || (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0)
}

const FIELD_PALETTE: [Rgb; 6] = [
    [0.28, 0.42, 0.18],
    [0.45, 0.55, 0.22],
    [0.62, 0.55, 0.32],
    [0.52, 0.40, 0.26],
    [0.20, 0.33, 0.16],
    [0.70, 0.66, 0.45],
];

/// Recursively splits a rectangle into parcels.
fn parcels(rect: (f64, f64, f64, f64), depth: usize, rng: &mut RngStream, out: &mut Vec<(f64, f64, f64, f64)>) {
    let (x0, y0, x1, y1) = rect;
    let (w, h) = (x1 - x0, y1 - y0);
    if depth == 0 || (w < 14.0 && h < 14.0) || (depth < 3 && rng.bernoulli(0.25)) {
        out.push(rect);
        return;
    }
    let t = 0.3 + 0.4 * rng.next_f64();
    if w >= h {
        let xm = x0 + w * t;
        parcels((x0, y0, xm, y1), depth - 1, rng, out);
        parcels((xm, y0, x1, y1), depth - 1, rng, out);
    } else {
        let ym = y0 + h * t;
        parcels((x0, y0, x1, ym), depth - 1, rng, out);
        parcels((x0, ym, x1, y1), depth - 1, rng, out);
    }
}

fn aerial(size: usize, rng: &mut RngStream) -> ImageTensor {
    let s = size as f64;
    let mut cv = Canvas::new(size);
    let mut rects = Vec::new();
    parcels((-2.0, -2.0, s + 2.0, s + 2.0), 5, rng, &mut rects);
    for (x0, y0, x1, y1) in rects {
        let base = jitter(FIELD_PALETTE[rng.choice(FIELD_PALETTE.len())], rng, 0.05);
        let period = 1.5 + 3.0 * rng.next_f64();
        let horizontal = rng.bernoulli(0.5);
        let depth = 0.05 + 0.1 * rng.next_f64();
        cv.paint(
            |x, y| x >= x0 + 0.6 && x < x1 - 0.6 && y >= y0 + 0.6 && y < y1 - 0.6,
            move |x, y| {
                let u = if horizontal { y } else { x };
                let w = (u / period * std::f64::consts::TAU).sin() * depth;
                base.map(|v| (v as f64 * (1.0 + w)) as f32)
            },
        );
    }

    let roads = 1 + rng.choice(3);
    for _ in 0..roads {
        let gray = 0.45 + 0.3 * rng.next_f64() as f32;
        let (px, py) = (rng.next_f64() * s, rng.next_f64() * s);
        let a = rng.next_f64() * std::f64::consts::PI;
        let (nx, ny) = (-a.sin(), a.cos());
        let half = 0.8 + 1.2 * rng.next_f64();
        cv.paint(
            |x, y| ((x - px) * nx + (y - py) * ny).abs() <= half,
            |_, _| [gray, gray, gray * 0.97],
        );
    }

    let blocks = rng.choice(4);
    for _ in 0..blocks {
        let (bx, by) = (rng.next_f64() * s, rng.next_f64() * s);
        let n = 3 + rng.choice(6);
        for _ in 0..n {
            let x0 = bx + rng.normal(0.0, 8.0);
            let y0 = by + rng.normal(0.0, 8.0);
            let (w, h) = (2.0 + 5.0 * rng.next_f64(), 2.0 + 5.0 * rng.next_f64());
            let roof = if rng.bernoulli(0.5) {
                jitter([0.75, 0.35, 0.28], rng, 0.08)
            } else {
                jitter([0.82, 0.82, 0.80], rng, 0.05)
            };
            cv.paint(
                |x, y| x >= x0 + 1.0 && x < x0 + w + 1.0 && y >= y0 + 1.0 && y < y0 + h + 1.0,
                |_, _| [0.12, 0.12, 0.14],
            );
            cv.paint(|x, y| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h, |_, _| roof);
        }
    }
    cv.into_tensor(rng, 0.008)
}

/// One `3 × size × size` scene in `[0, 1]`.
pub fn generate_scene(style: SceneStyle, size: usize, rng: &mut RngStream) -> ImageTensor {
    match style {
        SceneStyle::Generic => generic(size, rng),
        SceneStyle::Aerial => aerial(size, rng),
    }
}

/// Writes `count` scenes as `scene_NNNNN.ppm` into `dir`.
pub fn write_corpus(dir: &Path, count: usize, size: usize, style: SceneStyle, seed: u64) -> Result<Vec<PathBuf>> {
    let root = RngStream::new(seed);
    let mut paths = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = root.derive(crate::rng::labels::SAMPLE, i as u64);
        let img = generate_scene(style, size, &mut rng);
        let path = dir.join(format!("scene_{i:05}.ppm"));
        atomic_write(&path, &pnm::encode(&img)?)?;
        paths.push(path);
    }
    Ok(paths)
}
