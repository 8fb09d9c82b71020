//! Wald-protocol degradation and zero-shot evaluation.

use rayon::prelude::*;

use crate::degradation::{apply_blur, downsample, Blur};
use crate::error::{Error, Result};
use crate::metrics::{full_metrics, psnr, reduced_metrics, MetricReport, Resolution};
use crate::model::{predict, ModelParams};
use crate::tensor::{ImageTensor, InterpMethod};

use super::dataset::SamplePair;

pub const WALD_KERNEL: usize = 7;

/// Gaussian MTF stand-in (σ = ratio/2, 7×7) followed by area downsampling by `1/ratio`.
pub fn wald_lowpass(img: &ImageTensor, ratio: usize) -> Result<ImageTensor> {
    if ratio == 0 {
        return Err(Error::Config("ratio must be positive".into()));
    }
    let blurred = apply_blur(
        img,
        &Blur::Gaussian {
            sigma: ratio as f64 / 2.0,
            k: WALD_KERNEL,
        },
    )?;
    downsample(&blurred, 1.0 / ratio as f64, InterpMethod::Area)
}

/// Reduced-resolution inputs built from a native (MS, PAN) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct WaldPair {
    pub lrms: ImageTensor,
    /// PAN degraded by the same operator; this is also the LRPAN used by D_S.
    pub pan: ImageTensor,
    pub gt: ImageTensor,
}

/// Degrades both images by `ratio`; PAN must be `ratio` times the MS size.
pub fn wald_degrade(ms: &ImageTensor, pan: &ImageTensor, ratio: usize) -> Result<WaldPair> {
    if pan.channels() != 1 || pan.height() != ms.height() * ratio || pan.width() != ms.width() * ratio {
        return Err(Error::ShapeError(format!(
            "PAN {:?} is not {ratio}x MS {:?}",
            pan.shape(),
            ms.shape()
        )));
    }
    Ok(WaldPair {
        lrms: wald_lowpass(ms, ratio)?,
        pan: wald_lowpass(pan, ratio)?,
        gt: ms.clone(),
    })
}

/// Mean PSNR of clamped predictions over `samples`.
pub fn mean_psnr(params: &ModelParams, samples: &[SamplePair]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Config("no samples to evaluate".into()));
    }
    let vals = samples
        .par_iter()
        .map(|s| psnr(&predict(params, &s.lrms, &s.pan)?, &s.gt))
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

/// Reduced-resolution metrics of every sample against its ground truth.
pub fn eval_reduced(params: &ModelParams, samples: &[SamplePair], ratio: f64) -> Result<MetricReport> {
    let rows = samples
        .par_iter()
        .map(|s| reduced_metrics(&predict(params, &s.lrms, &s.pan)?, &s.gt, ratio))
        .collect::<Result<Vec<_>>>()?;
    let mut report = MetricReport::new(Resolution::Reduced);
    for (s, r) in samples.iter().zip(rows) {
        report.push(s.id(), r);
    }
    Ok(report)
}

/// No-reference metrics, treating each stored (LRMS, PAN) pair as native resolution.
pub fn eval_full(params: &ModelParams, samples: &[SamplePair], ratio: usize) -> Result<MetricReport> {
    let rows = samples
        .par_iter()
        .map(|s| {
            let fused = predict(params, &s.lrms, &s.pan)?;
            let lrms = s.lrms.zero_padded(fused.channels())?;
            let lrpan = wald_lowpass(&s.pan, ratio)?;
            if (lrpan.height(), lrpan.width()) != (lrms.height(), lrms.width()) {
                return Err(Error::ShapeError(format!(
                    "PAN/{ratio} is {}x{}, LRMS is {}x{}",
                    lrpan.height(),
                    lrpan.width(),
                    lrms.height(),
                    lrms.width()
                )));
            }
            full_metrics(&fused, &s.pan, &lrms, &lrpan)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = MetricReport::new(Resolution::Full);
    for (s, r) in samples.iter().zip(rows) {
        report.push(s.id(), r);
    }
    Ok(report)
}

/// Both suites for a checkpoint on an evaluation set, without any parameter updates.
pub fn zero_shot_eval(params: &ModelParams, samples: &[SamplePair], ratio: usize) -> Result<(MetricReport, MetricReport)> {
    Ok((
        eval_reduced(params, samples, ratio as f64)?,
        eval_full(params, samples, ratio)?,
    ))
}
