//! Dataset factory, training loops, evaluation and the benchmark driver.

mod bench;
mod dataset;
mod eval;
mod train;

pub use bench::{run_benchmark, write_benchmark, BenchReport, Condition, ConditionResult, RunRecord};
pub use dataset::{
    build_dataset, center_crop, load_dataset, load_sample, manifest_path, simulate_sample, Dataset, Manifest,
    ManifestEntry, SampleMeta, SamplePair, DATASET_FORMAT,
};
pub use eval::{eval_full, eval_reduced, mean_psnr, wald_degrade, wald_lowpass, zero_shot_eval, WaldPair, WALD_KERNEL};
pub use train::{log_csv, one_shot_tune, pretrain, val_split, EpochLog, PretrainOutcome, TuneOutcome};
