//! Zero-shot vs. one-shot (freeze/full) vs. scratch comparison on an unseen dataset.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::checkpoint::Checkpoint;
use crate::io::report::{curves_csv, metrics_csv, summary_markdown, Provenance, SummaryRow};
use crate::io::svg::{line_chart, Chart};
use crate::io::{atomic_write, write_json};
use crate::metrics::{MetricReport, Resolution};
use crate::model::{init_params, TuneMode};
use crate::rng::{labels, RngStream};

use super::dataset::Dataset;
use super::eval::{eval_full, eval_reduced};
use super::train::one_shot_tune;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    ZeroShot,
    Freeze,
    Full,
    Scratch,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::ZeroShot, Condition::Freeze, Condition::Full, Condition::Scratch];

    pub fn name(self) -> &'static str {
        match self {
            Condition::ZeroShot => "zero_shot",
            Condition::Freeze => "freeze",
            Condition::Full => "full",
            Condition::Scratch => "scratch",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub tune_sample: String,
    pub best_epoch: usize,
    pub curve: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: Condition,
    /// One record per (run, validation image); zero-shot has a single run.
    pub reduced: MetricReport,
    pub full: MetricReport,
    /// Mean validation PSNR per tuning epoch across runs (empty for zero-shot).
    pub mean_curve: Vec<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub config_hash: String,
    pub ratio: usize,
    pub tune_samples: Vec<String>,
    pub val_samples: Vec<String>,
    pub conditions: Vec<ConditionResult>,
    /// First epoch at which the pretrained full-tune mean curve reaches the
    /// scratch curve's final value.
    pub full_reaches_scratch_final: Option<usize>,
}

impl BenchReport {
    pub fn condition(&self, c: Condition) -> &ConditionResult {
        self.conditions.iter().find(|r| r.condition == c).expect("all conditions present")
    }

    pub fn mean_psnr(&self, c: Condition) -> f64 {
        self.condition(c).reduced.mean("psnr").expect("psnr column")
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            seed: self.seed,
            config_hash: u64::from_str_radix(&self.config_hash, 16).unwrap_or(0),
        }
    }
}

fn mean_curve(runs: &[RunRecord]) -> Vec<f64> {
    let len = runs.first().map_or(0, |r| r.curve.len());
    (0..len)
        .map(|e| runs.iter().map(|r| r.curve[e]).sum::<f64>() / runs.len() as f64)
        .collect()
}

fn prefixed(run: usize, src: &MetricReport, dst: &mut MetricReport) {
    for rec in &src.records {
        dst.push(format!("run{run:02}/{}", rec.id), rec.values.clone());
    }
}

/// Runs every condition. The first `cfg.bench.tune_images` samples of `eval`
/// are the one-shot tuning pairs; all conditions validate on the remainder.
pub fn run_benchmark(pretrained: &Checkpoint, eval: &Dataset, cfg: &RunConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let n_tune = cfg.bench.tune_images;
    if eval.samples.len() <= n_tune {
        return Err(Error::Config(format!(
            "benchmark needs more than {n_tune} samples, dataset has {}",
            eval.samples.len()
        )));
    }
    let ratio = eval.ratio().round() as usize;
    let (tune, val) = eval.samples.split_at(n_tune);
    let global = RngStream::new(cfg.seed);

    let mut results = Vec::new();
    let (zr, zf) = (
        eval_reduced(&pretrained.params, val, ratio as f64)?,
        eval_full(&pretrained.params, val, ratio)?,
    );
    log::info!("zero-shot: {:.3} dB", zr.mean("psnr").unwrap_or(f64::NAN));
    results.push(ConditionResult {
        condition: Condition::ZeroShot,
        reduced: zr,
        full: zf,
        mean_curve: Vec::new(),
        runs: Vec::new(),
    });

    for cond in [Condition::Freeze, Condition::Full, Condition::Scratch] {
        let mut reduced = MetricReport::new(Resolution::Reduced);
        let mut full = MetricReport::new(Resolution::Full);
        let mut runs = Vec::with_capacity(n_tune);
        for (r, pair) in tune.iter().enumerate() {
            let (start, mode) = match cond {
                Condition::Freeze => (pretrained.clone(), TuneMode::Freeze),
                Condition::Full => (pretrained.clone(), TuneMode::Full),
                _ => {
                    let params = init_params(cfg.c_max, &mut global.derive(labels::BENCH, r as u64));
                    (
                        Checkpoint {
                            params,
                            seed: cfg.seed,
                            epoch: 0,
                            config_hash: pretrained.config_hash,
                            optimizer: None,
                        },
                        TuneMode::Full,
                    )
                }
            };
            let out = one_shot_tune(&start, pair, val, mode, cfg)?;
            prefixed(r, &eval_reduced(&out.best.params, val, ratio as f64)?, &mut reduced);
            prefixed(r, &eval_full(&out.best.params, val, ratio)?, &mut full);
            log::info!(
                "{} run {r}: best epoch {} at {:.3} dB",
                cond.name(),
                out.best_epoch,
                out.curve[out.best_epoch - 1]
            );
            runs.push(RunRecord {
                run: r,
                tune_sample: pair.id(),
                best_epoch: out.best_epoch,
                curve: out.curve,
            });
        }
        results.push(ConditionResult {
            condition: cond,
            reduced,
            full,
            mean_curve: mean_curve(&runs),
            runs,
        });
    }

    let curve_of = |c: Condition| &results.iter().find(|r| r.condition == c).expect("present").mean_curve;
    let scratch_final = *curve_of(Condition::Scratch).last().expect("non-empty curve");
    let full_reaches_scratch_final = curve_of(Condition::Full)
        .iter()
        .position(|&v| v >= scratch_final)
        .map(|i| i + 1);

    Ok(BenchReport {
        seed: cfg.seed,
        config_hash: format!("{:016x}", cfg.hash()),
        ratio,
        tune_samples: tune.iter().map(|s| s.id()).collect(),
        val_samples: val.iter().map(|s| s.id()).collect(),
        conditions: results,
        full_reaches_scratch_final,
    })
}

/// Writes `report.{json,md,csv}`, `curves.csv` and `curves.svg` into `dir`.
pub fn write_benchmark(report: &BenchReport, dir: &Path) -> Result<()> {
    let prov = report.provenance();
    write_json(&dir.join("report.json"), report)?;

    let rows: Vec<SummaryRow<'_>> = report
        .conditions
        .iter()
        .map(|c| SummaryRow {
            label: c.condition.name(),
            reduced: Some(&c.reduced),
            full: Some(&c.full),
        })
        .collect();
    let mut md = summary_markdown("One-shot benchmark", &prov, &rows);
    md.push_str(&format!(
        "\n{} tuning runs, {} validation images, ratio {}x.\n",
        report.tune_samples.len(),
        report.val_samples.len(),
        report.ratio
    ));
    atomic_write(&dir.join("report.md"), md.as_bytes())?;

    let mut csv = format!("# {}\ncondition,resolution,image,metric,value\n", prov.stamp());
    for c in &report.conditions {
        for (tag, rep) in [("reduced", &c.reduced), ("full", &c.full)] {
            for line in metrics_csv(rep, &prov).lines().skip(2) {
                csv.push_str(&format!("{},{tag},{line}\n", c.condition.name()));
            }
        }
    }
    atomic_write(&dir.join("report.csv"), csv.as_bytes())?;

    let series: Vec<(String, Vec<f64>)> = report
        .conditions
        .iter()
        .filter(|c| !c.mean_curve.is_empty())
        .map(|c| (c.condition.name().to_string(), c.mean_curve.clone()))
        .collect();
    atomic_write(&dir.join("curves.csv"), curves_csv(&series, &prov).as_bytes())?;
    let svg = line_chart(
        &Chart {
            title: "Validation PSNR during one-shot tuning",
            x_label: "epoch",
            y_label: "PSNR (dB)",
            series: &series,
        },
        &prov,
    );
    atomic_write(&dir.join("curves.svg"), svg.as_bytes())?;
    Ok(())
}
