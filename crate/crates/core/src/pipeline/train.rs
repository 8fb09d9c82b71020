//! Pretraining on simulated pairs and one-shot tuning on a single pair.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::checkpoint::Checkpoint;
use crate::io::report::Provenance;
use crate::model::{batch_gradients, init_params, Example, ModelParams, TuneMode};
use crate::optim::{adamw_step, lr_at, AdamWState, ScheduleConfig};
use crate::rng::{labels, RngStream};

use super::dataset::SamplePair;
use super::eval::mean_psnr;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Learning rate of the epoch's first step.
    pub lr: f64,
    pub val_psnr: f64,
}

pub fn log_csv(log: &[EpochLog], prov: &Provenance) -> String {
    let mut out = format!("# {}\nepoch,loss,lr,val_psnr\n", prov.stamp());
    for e in log {
        let _ = writeln!(out, "{},{},{},{}", e.epoch, e.loss, e.lr, e.val_psnr);
    }
    out
}

pub struct PretrainOutcome {
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub log: Vec<EpochLog>,
    pub train_count: usize,
    pub val_count: usize,
}

/// Number of samples held out for validation (taken from the end).
pub fn val_split(n: usize, fraction: f64) -> usize {
    if n < 2 || fraction <= 0.0 {
        return 0;
    }
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

fn examples(samples: &[SamplePair]) -> Vec<Example<'_>> {
    samples
        .iter()
        .map(|s| Example {
            lrms: &s.lrms,
            pan: &s.pan,
            gt: &s.gt,
        })
        .collect()
}

/// Trains from scratch with AdamW on L1 loss; keeps the best-validation and last checkpoints.
///
/// With fewer than two samples there is no held-out split and validation
/// runs on the training set.
pub fn pretrain(samples: &[SamplePair], cfg: &RunConfig) -> Result<PretrainOutcome> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(crate::error::Error::Config("cannot pretrain on an empty dataset".into()));
    }
    let n_val = val_split(samples.len(), cfg.train.val_fraction);
    let (train, val) = samples.split_at(samples.len() - n_val);
    let val = if val.is_empty() { train } else { val };
    let t = &cfg.train;
    let sched = ScheduleConfig {
        peak_lr: t.peak_lr,
        warmup_epochs: t.warmup_epochs,
        total_epochs: t.epochs,
        steps_per_epoch: train.len().div_ceil(t.batch_size),
        min_lr: 0.0,
    };
    sched.validate()?;

    let global = RngStream::new(cfg.seed);
    let mut params = init_params(cfg.c_max, &mut global.derive(labels::INIT, 0));
    let mut opt = AdamWState::new(&params, cfg.optimizer.clone());
    let all = examples(train);
    let hash = cfg.hash();
    let snapshot = |params: &ModelParams, opt: &AdamWState, epoch: usize| Checkpoint {
        params: params.clone(),
        seed: cfg.seed,
        epoch: epoch as u32,
        config_hash: hash,
        optimizer: Some(opt.clone()),
    };

    let mut log = Vec::with_capacity(t.epochs);
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut step = 0usize;
    for epoch in 0..t.epochs {
        let order = global.derive(labels::SHUFFLE, epoch as u64).permutation(train.len());
        let lr_first = lr_at(step, &sched);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(t.batch_size) {
            let batch: Vec<Example<'_>> = chunk.iter().map(|&i| all[i]).collect();
            let (loss, grads) = batch_gradients(&params, &batch)?;
            let lr = lr_at(step, &sched);
            if let Err(e) = adamw_step(&mut opt, &mut params, &grads, lr, TuneMode::Full) {
                log::error!("epoch {} step {step}: {e}", epoch + 1);
                return Err(e);
            }
            loss_sum += loss * chunk.len() as f64;
            step += 1;
        }
        let val_psnr = mean_psnr(&params, val)?;
        let entry = EpochLog {
            epoch: epoch + 1,
            loss: loss_sum / train.len() as f64,
            lr: lr_first,
            val_psnr,
        };
        log::info!(
            "epoch {:>3}  loss {:.5}  lr {:.2e}  val PSNR {:.3} dB",
            entry.epoch,
            entry.loss,
            entry.lr,
            entry.val_psnr
        );
        log.push(entry);
        if best.as_ref().is_none_or(|(b, _)| val_psnr > *b) {
            best = Some((val_psnr, snapshot(&params, &opt, epoch + 1)));
        }
    }
    Ok(PretrainOutcome {
        best: best.expect("at least one epoch").1,
        last: snapshot(&params, &opt, t.epochs),
        log,
        train_count: train.len(),
        val_count: if n_val == 0 { 0 } else { val.len() },
    })
}

pub struct TuneOutcome {
    pub best: Checkpoint,
    pub best_epoch: usize,
    /// Validation PSNR after each epoch.
    pub curve: Vec<f64>,
    pub losses: Vec<f64>,
    /// Sample ids that contributed gradients, one entry per step.
    pub gradient_sources: Vec<String>,
}

/// Fine-tunes `start` on the single pair `tune`, one step per epoch, keeping
/// the epoch with the best validation PSNR. The starting point itself is not a candidate.
pub fn one_shot_tune(
    start: &Checkpoint,
    tune: &SamplePair,
    val: &[SamplePair],
    mode: TuneMode,
    cfg: &RunConfig,
) -> Result<TuneOutcome> {
    let tc = &cfg.tune;
    let sched = ScheduleConfig {
        peak_lr: tc.lr,
        warmup_epochs: tc.warmup_epochs,
        total_epochs: tc.epochs,
        steps_per_epoch: 1,
        min_lr: 0.0,
    };
    sched.validate()?;
    let mut params = start.params.clone();
    let mut opt = AdamWState::new(&params, cfg.optimizer.clone());
    let ex = [Example {
        lrms: &tune.lrms,
        pan: &tune.pan,
        gt: &tune.gt,
    }];
    let mut curve = Vec::with_capacity(tc.epochs);
    let mut losses = Vec::with_capacity(tc.epochs);
    let mut sources = Vec::with_capacity(tc.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    for epoch in 0..tc.epochs {
        let (loss, grads) = batch_gradients(&params, &ex)?;
        sources.push(tune.id());
        adamw_step(&mut opt, &mut params, &grads, lr_at(epoch, &sched), mode)?;
        let v = mean_psnr(&params, val)?;
        curve.push(v);
        losses.push(loss);
        if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
            best = Some((v, epoch + 1, params.clone()));
        }
    }
    let (_, best_epoch, best_params) = best.expect("at least one epoch");
    Ok(TuneOutcome {
        best: Checkpoint {
            params: best_params,
            seed: start.seed,
            epoch: best_epoch as u32,
            config_hash: start.config_hash,
            optimizer: None,
        },
        best_epoch,
        curve,
        losses,
        gradient_sources: sources,
    })
}
