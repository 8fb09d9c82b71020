//! Reference fusion network with a hand-written backward pass.
//!
//! ```text
//! lrms ─ zero-pad to c_max ─ bicubic upsample ─┬──────────────────────────────┐
//!                                              concat ─ conv1 ─ ReLU ─ conv2 ─ ReLU ─ conv_out ─ + ─ pred
//! pan ─────────────────────────────────────────┘
//! ```
//!
//! All convolutions are 3×3, stride 1, replicate padding. `conv_out` starts at
//! zero, so an untrained network returns the upsampled multispectral input.

pub mod conv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::{resample, ImageTensor, InterpMethod};

pub const HIDDEN: usize = 32;

/// Parameter group names in declaration (and checkpoint) order.
pub const GROUP_NAMES: [&str; 6] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "conv_out.weight",
    "conv_out.bias",
];

#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer {
    pub in_ch: usize,
    pub out_ch: usize,
    /// `out_ch × in_ch × 3 × 3`, row-major.
    pub weight: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ConvLayer {
    fn zeros(in_ch: usize, out_ch: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            weight: vec![0.0; out_ch * in_ch * conv::TAPS],
            bias: vec![0.0; out_ch],
        }
    }

    fn he_normal(in_ch: usize, out_ch: usize, rng: &mut RngStream) -> Self {
        let sd = (2.0 / (in_ch * conv::TAPS) as f64).sqrt();
        let mut layer = Self::zeros(in_ch, out_ch);
        for w in &mut layer.weight {
            *w = rng.normal(0.0, sd) as f32;
        }
        layer
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub c_max: usize,
    pub hidden: usize,
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    pub conv_out: ConvLayer,
}

impl ModelParams {
    pub fn zeros(c_max: usize, hidden: usize) -> Self {
        Self {
            c_max,
            hidden,
            conv1: ConvLayer::zeros(c_max + 1, hidden),
            conv2: ConvLayer::zeros(hidden, hidden),
            conv_out: ConvLayer::zeros(hidden, c_max),
        }
    }

    pub fn groups(&self) -> [&[f32]; 6] {
        [
            &self.conv1.weight,
            &self.conv1.bias,
            &self.conv2.weight,
            &self.conv2.bias,
            &self.conv_out.weight,
            &self.conv_out.bias,
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<f32>; 6] {
        [
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
            &mut self.conv_out.weight,
            &mut self.conv_out.bias,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.conv1.param_count() + self.conv2.param_count() + self.conv_out.param_count()
    }

    /// Cheap order-sensitive digest used to detect stale activation tapes.
    fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        for g in self.groups() {
            for v in g {
                h = (h ^ v.to_bits() as u64).wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        h
    }
}

/// He-normal hidden layers, zero output layer.
pub fn init_params(c_max: usize, rng: &mut RngStream) -> ModelParams {
    ModelParams {
        c_max,
        hidden: HIDDEN,
        conv1: ConvLayer::he_normal(c_max + 1, HIDDEN, rng),
        conv2: ConvLayer::he_normal(HIDDEN, HIDDEN, rng),
        conv_out: ConvLayer::zeros(HIDDEN, c_max),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuneMode {
    Full,
    Freeze,
}

impl TuneMode {
    /// Whether parameter group `group` (index into [`GROUP_NAMES`]) is updated.
    pub fn is_trainable(self, group: usize) -> bool {
        match self {
            TuneMode::Full => true,
            TuneMode::Freeze => group >= 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TuneMode::Full => "full",
            TuneMode::Freeze => "freeze",
        }
    }
}

impl std::str::FromStr for TuneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(TuneMode::Full),
            "freeze" => Ok(TuneMode::Freeze),
            other => Err(Error::Config(format!("unknown tune mode `{other}`"))),
        }
    }
}

/// Indices and names of the groups updated under `mode`.
pub fn trainable_params(params: &ModelParams, mode: TuneMode) -> Vec<(usize, &'static str, usize)> {
    params
        .groups()
        .iter()
        .enumerate()
        .filter(|(i, _)| mode.is_trainable(*i))
        .map(|(i, g)| (i, GROUP_NAMES[i], g.len()))
        .collect()
}

pub fn trainable_count(params: &ModelParams, mode: TuneMode) -> usize {
    trainable_params(params, mode).iter().map(|t| t.2).sum()
}

/// Gradients with the same layout as [`ModelParams::groups`].
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub groups: [Vec<f32>; 6],
}

impl GradientSet {
    pub fn zeros_like(params: &ModelParams) -> Self {
        let g = params.groups();
        Self {
            groups: std::array::from_fn(|i| vec![0.0; g[i].len()]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.groups.iter().flatten().all(|v| v.is_finite())
    }

    pub fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.groups.iter_mut().zip(&other.groups) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f32) {
        for v in self.groups.iter_mut().flatten() {
            *v *= s;
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.groups
            .iter()
            .flatten()
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }
}

/// Activations retained by [`forward`] for [`backward`].
#[derive(Debug)]
pub struct Tape {
    fingerprint: u64,
    c_max: usize,
    hidden: usize,
    height: usize,
    width: usize,
    col0: Vec<f32>,
    col1: Vec<f32>,
    col2: Vec<f32>,
    act1: Vec<f32>,
    act2: Vec<f32>,
}

/// Zero-pads `lrms` to `c_max` bands and upsamples it bicubically to `h × w`.
pub fn upsample_ms(lrms: &ImageTensor, c_max: usize, h: usize, w: usize) -> Result<ImageTensor> {
    let padded = lrms.zero_padded(c_max)?;
    if (padded.height(), padded.width()) == (h, w) {
        return Ok(padded);
    }
    resample(&padded, h, w, InterpMethod::Bicubic)
}

fn check_inputs(params: &ModelParams, lrms: &ImageTensor, pan: &ImageTensor) -> Result<()> {
    if pan.channels() != 1 {
        return Err(Error::ShapeError(format!(
            "PAN must have one band, got {}",
            pan.channels()
        )));
    }
    if lrms.channels() > params.c_max {
        return Err(Error::ShapeError(format!(
            "{} input bands exceed c_max = {}",
            lrms.channels(),
            params.c_max
        )));
    }
    let (h, w) = (pan.height() as f64, pan.width() as f64);
    let (lh, lw) = (lrms.height() as f64, lrms.width() as f64);
    if lh > h || lw > w {
        return Err(Error::ShapeError(format!(
            "LRMS {lh}x{lw} larger than PAN {h}x{w}"
        )));
    }
    // Both axes must upsample by the same factor to within one LR pixel.
    if (h / lh - w / lw).abs() * lh.min(lw) > h / lh {
        return Err(Error::ShapeError(format!(
            "aspect mismatch: LRMS {lh}x{lw} vs PAN {h}x{w}"
        )));
    }
    Ok(())
}

fn relu_in_place(v: &mut [f32]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Runs the network. `pred` is not clamped; clamp before scoring.
pub fn forward(
    params: &ModelParams,
    lrms: &ImageTensor,
    pan: &ImageTensor,
) -> Result<(ImageTensor, Tape)> {
    check_inputs(params, lrms, pan)?;
    let (h, w) = (pan.height(), pan.width());
    let n = h * w;
    let up = upsample_ms(lrms, params.c_max, h, w)?;
    let input = ImageTensor::concat(&[&up, pan])?;

    let col0 = conv::im2col(input.data(), params.c_max + 1, h, w);
    let mut act1 = conv::forward(&params.conv1.weight, &params.conv1.bias, &col0, params.hidden, n);
    relu_in_place(&mut act1);

    let col1 = conv::im2col(&act1, params.hidden, h, w);
    let mut act2 = conv::forward(&params.conv2.weight, &params.conv2.bias, &col1, params.hidden, n);
    relu_in_place(&mut act2);

    let col2 = conv::im2col(&act2, params.hidden, h, w);
    let residual = conv::forward(
        &params.conv_out.weight,
        &params.conv_out.bias,
        &col2,
        params.c_max,
        n,
    );

    let pred: Vec<f32> = up.data().iter().zip(&residual).map(|(u, r)| u + r).collect();
    let pred = ImageTensor::from_vec(params.c_max, h, w, pred)?;
    let tape = Tape {
        fingerprint: params.fingerprint(),
        c_max: params.c_max,
        hidden: params.hidden,
        height: h,
        width: w,
        col0,
        col1,
        col2,
        act1,
        act2,
    };
    Ok((pred, tape))
}

/// Forward pass for evaluation: prediction clamped to `[0, 1]`.
pub fn predict(params: &ModelParams, lrms: &ImageTensor, pan: &ImageTensor) -> Result<ImageTensor> {
    let (pred, _) = forward(params, lrms, pan)?;
    Ok(crate::tensor::clamp01(&pred))
}

/// Mean absolute error and its gradient `sign(pred − gt) / N` (with `sign(0) = 0`).
pub fn l1_loss(pred: &ImageTensor, gt: &ImageTensor) -> Result<(f64, ImageTensor)> {
    if !pred.same_shape(gt) {
        return Err(Error::ShapeError(format!(
            "pred {:?} vs gt {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    let n = pred.len() as f64;
    let inv = (1.0 / n) as f32;
    let mut sum = 0.0f64;
    let grad = pred
        .data()
        .iter()
        .zip(gt.data())
        .map(|(p, g)| {
            let d = p - g;
            sum += (d as f64).abs();
            if d > 0.0 {
                inv
            } else if d < 0.0 {
                -inv
            } else {
                0.0
            }
        })
        .collect();
    let (c, h, w) = pred.shape();
    Ok((sum / n, ImageTensor::from_vec(c, h, w, grad)?))
}

/// Reverse-mode gradients of the loss with respect to every parameter group.
///
/// The upsampled MS branch is treated as constant input.
pub fn backward(params: &ModelParams, tape: &Tape, dpred: &ImageTensor) -> Result<GradientSet> {
    if tape.c_max != params.c_max || tape.hidden != params.hidden {
        return Err(Error::StaleTape("layer widths differ".into()));
    }
    if tape.fingerprint != params.fingerprint() {
        return Err(Error::StaleTape(
            "parameters changed since the forward pass".into(),
        ));
    }
    if dpred.shape() != (params.c_max, tape.height, tape.width) {
        return Err(Error::ShapeError(format!(
            "gradient shape {:?} does not match prediction",
            dpred.shape()
        )));
    }
    let (h, w) = (tape.height, tape.width);
    let n = h * w;
    let mut grads = GradientSet::zeros_like(params);
    let [g1w, g1b, g2w, g2b, gow, gob] = &mut grads.groups;

    let dcol2 = conv::backward(
        &params.conv_out.weight,
        &tape.col2,
        dpred.data(),
        params.c_max,
        n,
        gow,
        gob,
        true,
    )
    .expect("requested");
    let mut dact2 = conv::col2im(&dcol2, params.hidden, h, w);
    for (d, a) in dact2.iter_mut().zip(&tape.act2) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }

    let dcol1 = conv::backward(&params.conv2.weight, &tape.col1, &dact2, params.hidden, n, g2w, g2b, true)
        .expect("requested");
    let mut dact1 = conv::col2im(&dcol1, params.hidden, h, w);
    for (d, a) in dact1.iter_mut().zip(&tape.act1) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }

    // The network input is not trainable, so its gradient is skipped.
    conv::backward(&params.conv1.weight, &tape.col0, &dact1, params.hidden, n, g1w, g1b, false);
    Ok(grads)
}

/// One training example: degraded inputs plus ground truth.
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub lrms: &'a ImageTensor,
    pub pan: &'a ImageTensor,
    pub gt: &'a ImageTensor,
}

/// Mean loss and mean gradient over a batch.
///
/// Examples run in parallel; gradients are summed in batch order so the
/// result does not depend on scheduling.
pub fn batch_gradients(params: &ModelParams, batch: &[Example<'_>]) -> Result<(f64, GradientSet)> {
    use rayon::prelude::*;

    if batch.is_empty() {
        return Err(Error::ShapeError("empty batch".into()));
    }
    let per_example: Vec<Result<(f64, GradientSet)>> = batch
        .par_iter()
        .map(|ex| {
            let (pred, tape) = forward(params, ex.lrms, ex.pan)?;
            let (loss, dpred) = l1_loss(&pred, ex.gt)?;
            Ok((loss, backward(params, &tape, &dpred)?))
        })
        .collect();
    let mut total = GradientSet::zeros_like(params);
    let mut loss = 0.0;
    for r in per_example {
        let (l, g) = r?;
        loss += l;
        total.add_assign(&g);
    }
    let inv = 1.0 / batch.len() as f64;
    total.scale(inv as f32);
    Ok((loss * inv, total))
}
