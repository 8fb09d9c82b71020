//! AdamW with decoupled weight decay, and a linear-warmup cosine schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GradientSet, ModelParams, TuneMode, GROUP_NAMES};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Rescale gradients so their global L2 norm does not exceed this.
    pub clip_norm: Option<f64>,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            clip_norm: None,
        }
    }
}

/// Moment estimates, one buffer per parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamWState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub hyper: AdamWConfig,
}

impl AdamWState {
    pub fn new(params: &ModelParams, hyper: AdamWConfig) -> Self {
        let sizes: Vec<usize> = params.groups().iter().map(|g| g.len()).collect();
        Self::with_sizes(&sizes, hyper)
    }

    pub fn with_sizes(sizes: &[usize], hyper: AdamWConfig) -> Self {
        Self {
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            hyper,
        }
    }

    /// Updates the groups flagged in `trainable`; others are left untouched.
    pub fn step_groups(
        &mut self,
        params: &mut [&mut [f32]],
        grads: &[&[f32]],
        trainable: &[bool],
        names: &[&'static str],
        lr: f64,
    ) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() || trainable.len() != self.m.len() {
            return Err(Error::ShapeError("optimizer state does not match parameter groups".into()));
        }
        for (g, grad) in grads.iter().enumerate() {
            if params[g].len() != self.m[g].len() || grad.len() != self.m[g].len() {
                return Err(Error::ShapeError(format!("group {} has the wrong length", names[g])));
            }
            if trainable[g] && grad.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { group: names[g] });
            }
        }

        let mut scale = 1.0;
        if let Some(max) = self.hyper.clip_norm {
            let norm = grads
                .iter()
                .zip(trainable)
                .filter(|(_, t)| **t)
                .flat_map(|(g, _)| g.iter())
                .map(|&v| (v as f64) * (v as f64))
                .sum::<f64>()
                .sqrt();
            if norm > max {
                scale = max / norm;
            }
        }

        self.step += 1;
        let h = &self.hyper;
        let t = self.step as f64;
        let bc1 = 1.0 - h.beta1.powf(t);
        let bc2 = 1.0 - h.beta2.powf(t);
        for g in 0..grads.len() {
            if !trainable[g] {
                continue;
            }
            let (m, v) = (&mut self.m[g], &mut self.v[g]);
            for (i, theta) in params[g].iter_mut().enumerate() {
                let grad = grads[g][i] as f64 * scale;
                m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grad;
                v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grad * grad;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let th = *theta as f64;
                *theta = (th - lr * (m_hat / (v_hat.sqrt() + h.eps) + h.weight_decay * th)) as f32;
            }
        }
        Ok(())
    }
}

/// One AdamW step over the groups selected by `mode`. Nothing changes on error.
pub fn adamw_step(
    state: &mut AdamWState,
    params: &mut ModelParams,
    grads: &GradientSet,
    lr: f64,
    mode: TuneMode,
) -> Result<()> {
    let trainable: Vec<bool> = (0..GROUP_NAMES.len()).map(|g| mode.is_trainable(g)).collect();
    let grad_refs: Vec<&[f32]> = grads.groups.iter().map(|g| g.as_slice()).collect();
    let mut param_refs: Vec<&mut [f32]> = params.groups_mut().into_iter().map(|g| g.as_mut_slice()).collect();
    state.step_groups(&mut param_refs, &grad_refs, &trainable, &GROUP_NAMES, lr)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub peak_lr: f64,
    pub warmup_epochs: usize,
    pub total_epochs: usize,
    pub steps_per_epoch: usize,
    #[serde(default)]
    pub min_lr: f64,
}

impl ScheduleConfig {
    pub fn total_steps(&self) -> usize {
        self.total_epochs * self.steps_per_epoch
    }

    pub fn warmup_steps(&self) -> usize {
        self.warmup_epochs * self.steps_per_epoch
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_epochs == 0 || self.steps_per_epoch == 0 {
            return Err(Error::Config("schedule needs at least one step".into()));
        }
        if self.warmup_epochs >= self.total_epochs {
            return Err(Error::Config(format!(
                "warmup_epochs ({}) must be below total_epochs ({})",
                self.warmup_epochs, self.total_epochs
            )));
        }
        Ok(())
    }
}

/// Learning rate for optimizer step `step` (0-based). Reaches `min_lr` at `step = total_steps`.
pub fn lr_at(step: usize, cfg: &ScheduleConfig) -> f64 {
    let w = cfg.warmup_steps();
    let t = cfg.total_steps();
    if step < w {
        return cfg.peak_lr * (step + 1) as f64 / w as f64;
    }
    if step >= t {
        return cfg.min_lr;
    }
    let progress = (step - w) as f64 / (t - w) as f64;
    cfg.min_lr + (cfg.peak_lr - cfg.min_lr) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
}
