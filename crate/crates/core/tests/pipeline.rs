use std::collections::BTreeMap;
use std::path::Path;

use pansim::config::RunConfig;
use pansim::degradation::{gaussian_kernel, Profile};
use pansim::error::Error;
use pansim::io::checkpoint::Checkpoint;
use pansim::metrics::psnr;
use pansim::model::{init_params, l1_loss, upsample_ms, TuneMode};
use pansim::pipeline::{
    build_dataset, eval_full, eval_reduced, load_dataset, mean_psnr, one_shot_tune, pretrain, run_benchmark,
    val_split, wald_degrade, write_benchmark, Condition, SamplePair,
};
use pansim::rng::RngStream;
use pansim::scenes::{write_corpus, SceneStyle};
use pansim::tensor::{clamp01, ImageTensor};

fn small_config(seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.seed = seed;
    cfg.crop = 32;
    cfg.train.epochs = 3;
    cfg.train.warmup_epochs = 1;
    cfg.train.batch_size = 4;
    cfg
}

fn corpus(dir: &Path, count: usize, style: SceneStyle) {
    write_corpus(dir, count, 40, style, 11).unwrap();
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn dataset(count: usize, profile: Profile, cfg: &RunConfig) -> (tempfile::TempDir, Vec<SamplePair>) {
    let tmp = tempfile::tempdir().unwrap();
    corpus(&tmp.path().join("corpus"), 6, SceneStyle::Generic);
    build_dataset(&tmp.path().join("corpus"), &tmp.path().join("ds"), count, profile, cfg).unwrap();
    let ds = load_dataset(&tmp.path().join("ds")).unwrap();
    (tmp, ds.samples)
}

#[test]
fn zero_count_gives_valid_empty_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    corpus(&tmp.path().join("c"), 2, SceneStyle::Generic);
    let m = build_dataset(&tmp.path().join("c"), &tmp.path().join("ds"), 0, Profile::Pretrain, &small_config(1)).unwrap();
    assert!(m.samples.is_empty());
    let back = load_dataset(&tmp.path().join("ds")).unwrap();
    assert_eq!(back.manifest, m);
    assert!(back.samples.is_empty());
}

#[test]
fn same_seed_gives_identical_dataset_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    corpus(&c, 3, SceneStyle::Aerial);
    let cfg = small_config(5);
    build_dataset(&c, &tmp.path().join("a"), 7, Profile::Pretrain, &cfg).unwrap();
    build_dataset(&c, &tmp.path().join("b"), 7, Profile::Pretrain, &cfg).unwrap();
    let (a, b) = (read_tree(&tmp.path().join("a")), read_tree(&tmp.path().join("b")));
    assert_eq!(a.len(), 1 + 2 * 7);
    assert_eq!(a, b);

    build_dataset(&c, &tmp.path().join("other"), 7, Profile::Pretrain, &small_config(6)).unwrap();
    assert_ne!(a, read_tree(&tmp.path().join("other")));
}

#[test]
fn eval_profiles_have_exact_low_resolution() {
    let mut cfg = small_config(2);
    cfg.crop = 64;
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    write_corpus(&c, 3, 72, SceneStyle::Aerial, 3).unwrap();
    for (profile, lr) in [(Profile::Eval4x, 16), (Profile::Eval8x, 8)] {
        let out = tmp.path().join(profile.name());
        build_dataset(&c, &out, 5, profile, &cfg).unwrap();
        let ds = load_dataset(&out).unwrap();
        assert_eq!(ds.ratio(), (64 / lr) as f64);
        for s in &ds.samples {
            assert_eq!(s.lrms.shape(), (8, lr, lr));
            assert_eq!(s.pan.shape(), (1, 64, 64));
            assert_eq!(s.gt.shape(), (8, 64, 64));
            assert_eq!(s.meta.augment, pansim::augmentation::AugmentSpec::identity());
        }
    }
}

#[test]
fn pretrain_samples_respect_pair_invariants() {
    let (_tmp, samples) = dataset(12, Profile::Pretrain, &small_config(8));
    for s in &samples {
        assert_eq!(s.gt.height(), s.pan.height());
        let expect = (s.gt.height() as f64 * s.meta.degrade_ms.scale).round() as usize;
        assert_eq!(s.lrms.height(), expect);
        for t in [&s.lrms, &s.pan, &s.gt] {
            assert!(t.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}

#[test]
fn empty_or_unreadable_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    std::fs::create_dir_all(&c).unwrap();
    let cfg = small_config(1);
    let err = build_dataset(&c, &tmp.path().join("o"), 0, Profile::Pretrain, &cfg).unwrap_err();
    assert!(matches!(err, Error::EmptyCorpus(_)));

    std::fs::write(c.join("broken.ppm"), b"P6\n4 4\n255\n\x01").unwrap();
    let err = build_dataset(&c, &tmp.path().join("o"), 1, Profile::Pretrain, &cfg).unwrap_err();
    assert!(matches!(err, Error::EmptyCorpus(_)));

    // A bad file next to good ones is skipped.
    write_corpus(&c, 1, 40, SceneStyle::Generic, 2).unwrap();
    let m = build_dataset(&c, &tmp.path().join("o"), 3, Profile::Pretrain, &cfg).unwrap();
    assert!(m.samples.iter().all(|e| e.source != "broken.ppm"));
}

#[test]
fn first_logged_loss_is_the_upsampling_loss() {
    let mut cfg = small_config(4);
    cfg.train.epochs = 2;
    let (_tmp, samples) = dataset(1, Profile::Pretrain, &cfg);
    let s = &samples[0];
    let up = upsample_ms(&s.lrms, cfg.c_max, s.gt.height(), s.gt.width()).unwrap();
    let (expected, _) = l1_loss(&up, &s.gt).unwrap();
    let out = pretrain(&samples, &cfg).unwrap();
    assert_eq!(out.val_count, 0);
    assert!((out.log[0].loss - expected).abs() < 1e-9, "{} vs {expected}", out.log[0].loss);
}

#[test]
fn duplicate_sample_loss_does_not_increase() {
    let mut cfg = small_config(9);
    cfg.train.epochs = 6;
    cfg.train.batch_size = 12;
    cfg.train.val_fraction = 0.0;
    // One step per epoch; at the pretraining peak rate Adam's sign-like first
    // step overshoots on a single image, so use the fine-tuning rate.
    cfg.train.peak_lr = 1e-4;
    let (_tmp, samples) = dataset(1, Profile::Eval4x, &cfg);
    let dup: Vec<SamplePair> = std::iter::repeat_n(samples[0].clone(), 12).collect();
    let out = pretrain(&dup, &cfg).unwrap();
    let losses: Vec<f64> = out.log.iter().map(|e| e.loss).collect();
    for w in losses[..5].windows(2) {
        assert!(w[1] <= w[0], "{losses:?}");
    }
}

#[test]
fn pretraining_is_reproducible_and_logs_best_epoch() {
    let cfg = small_config(12);
    let (_tmp, samples) = dataset(10, Profile::Pretrain, &cfg);
    let a = pretrain(&samples, &cfg).unwrap();
    let b = pretrain(&samples, &cfg).unwrap();
    assert_eq!(a.best.to_bytes(), b.best.to_bytes());
    assert_eq!(a.last.to_bytes(), b.last.to_bytes());
    assert_eq!((a.train_count, a.val_count), (9, 1));
    assert_eq!(a.log.len(), 3);
    assert_eq!(a.last.epoch, 3);
    assert!(a.last.optimizer.is_some());

    // Evaluating the best checkpoint on the held-out split reproduces its logged PSNR.
    let val = &samples[samples.len() - val_split(samples.len(), cfg.train.val_fraction)..];
    let logged = a.log[a.best.epoch as usize - 1].val_psnr;
    let best_logged = a.log.iter().map(|e| e.val_psnr).fold(f64::MIN, f64::max);
    assert_eq!(logged, best_logged);
    let report = eval_reduced(&a.best.params, val, 4.0).unwrap();
    assert!((report.mean("psnr").unwrap() - logged).abs() < 1e-4);
}

/// Direct-loop Gaussian blur (replicate border) followed by block means.
fn wald_oracle(img: &ImageTensor, ratio: usize) -> Vec<f64> {
    let k = gaussian_kernel(ratio as f64 / 2.0, 7).unwrap();
    let (c, h, w) = img.shape();
    let r = 3isize;
    let mut blurred = vec![0.0f64; c * h * w];
    for ch in 0..c {
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for ky in -r..=r {
                    for kx in -r..=r {
                        let sy = (y as isize + ky).clamp(0, h as isize - 1) as usize;
                        let sx = (x as isize + kx).clamp(0, w as isize - 1) as usize;
                        acc += k.at((ky + r) as usize, (kx + r) as usize) as f64 * img.get(ch, sy, sx) as f64;
                    }
                }
                blurred[(ch * h + y) * w + x] = acc.clamp(0.0, 1.0);
            }
        }
    }
    let (lh, lw) = (h / ratio, w / ratio);
    let mut out = Vec::with_capacity(c * lh * lw);
    for ch in 0..c {
        for y in 0..lh {
            for x in 0..lw {
                let mut s = 0.0;
                for dy in 0..ratio {
                    for dx in 0..ratio {
                        s += blurred[(ch * h + y * ratio + dy) * w + x * ratio + dx];
                    }
                }
                out.push(s / (ratio * ratio) as f64);
            }
        }
    }
    out
}

#[test]
fn wald_degrade_shapes_constants_and_oracle() {
    let mut rng = RngStream::new(21);
    let ms = ImageTensor::from_fn(8, 16, 16, |_, _, _| rng.next_f64() as f32);
    let pan = ImageTensor::from_fn(1, 64, 64, |_, _, _| rng.next_f64() as f32);
    let w = wald_degrade(&ms, &pan, 4).unwrap();
    assert_eq!(w.lrms.shape(), (8, 4, 4));
    assert_eq!(w.pan.shape(), (1, 16, 16));
    assert_eq!(w.gt, ms);

    let flat = ImageTensor::filled(8, 16, 16, 0.375);
    let fw = wald_degrade(&flat, &ImageTensor::filled(1, 64, 64, 0.375), 4).unwrap();
    assert!(fw.lrms.data().iter().all(|&v| (v - 0.375).abs() < 1e-6));

    for ratio in [2usize, 4] {
        let img = ImageTensor::from_fn(3, 8 * ratio, 8 * ratio, |_, _, _| rng.next_f64() as f32);
        let pan = ImageTensor::from_fn(1, 8 * ratio * ratio, 8 * ratio * ratio, |_, _, _| 0.5);
        let got = wald_degrade(&img, &pan, ratio).unwrap().lrms;
        for (g, e) in got.data().iter().zip(wald_oracle(&img, ratio)) {
            assert!((*g as f64 - e).abs() < 1e-6, "{g} vs {e}");
        }
    }
    assert!(wald_degrade(&ms, &pan, 2).is_err());
}

#[test]
fn zero_output_layer_matches_upsampling_baseline() {
    let cfg = small_config(3);
    let (_tmp, samples) = dataset(5, Profile::Eval4x, &cfg);
    let params = init_params(cfg.c_max, &mut RngStream::new(1));
    let report = eval_reduced(&params, &samples, 4.0).unwrap();
    assert_eq!(report.count(), samples.len());
    let baseline: f64 = samples
        .iter()
        .map(|s| {
            let up = upsample_ms(&s.lrms, cfg.c_max, s.gt.height(), s.gt.width()).unwrap();
            psnr(&clamp01(&up), &s.gt).unwrap()
        })
        .sum::<f64>()
        / samples.len() as f64;
    assert!((report.mean("psnr").unwrap() - baseline).abs() < 1e-9);
    assert!((mean_psnr(&params, &samples).unwrap() - baseline).abs() < 1e-9);
    let full = eval_full(&params, &samples, 4).unwrap();
    assert_eq!(full.count(), samples.len());
    let q = full.mean("qnr").unwrap();
    assert!((0.0..=1.0).contains(&q));
}

fn start_checkpoint(cfg: &RunConfig, seed: u64) -> Checkpoint {
    Checkpoint {
        params: init_params(cfg.c_max, &mut RngStream::new(seed)),
        seed: cfg.seed,
        epoch: 0,
        config_hash: cfg.hash(),
        optimizer: None,
    }
}

fn perturbed(cfg: &RunConfig) -> Checkpoint {
    // Non-zero output layer so that every group receives gradient.
    let mut ck = start_checkpoint(cfg, 4);
    let mut rng = RngStream::new(5);
    for w in &mut ck.params.conv_out.weight {
        *w = rng.normal(0.0, 0.01) as f32;
    }
    ck
}

#[test]
fn freeze_tuning_leaves_backbone_bytes() {
    let mut cfg = small_config(7);
    cfg.tune.epochs = 5;
    let (_tmp, samples) = dataset(3, Profile::Eval4x, &cfg);
    let start = perturbed(&cfg);
    let out = one_shot_tune(&start, &samples[0], &samples[1..], TuneMode::Freeze, &cfg).unwrap();
    let (a, b) = (&start.params, &out.best.params);
    assert_eq!(a.conv1, b.conv1);
    assert_eq!(a.conv2, b.conv2);
    assert_ne!(a.conv_out, b.conv_out);
    assert_eq!(out.curve.len(), 5);
    assert_eq!(out.gradient_sources, vec![samples[0].id(); 5]);

    let full = one_shot_tune(&start, &samples[0], &samples[1..], TuneMode::Full, &cfg).unwrap();
    assert_ne!(start.params.conv1, full.best.params.conv1);
    assert!(full.gradient_sources.iter().all(|id| *id == samples[0].id()));
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let mut cfg = small_config(7);
    cfg.tune.epochs = 4;
    cfg.tune.lr = 0.0;
    let (_tmp, samples) = dataset(3, Profile::Eval4x, &cfg);
    let start = perturbed(&cfg);
    let out = one_shot_tune(&start, &samples[0], &samples[1..], TuneMode::Full, &cfg).unwrap();
    assert_eq!(out.best.params, start.params);
}

#[test]
fn fitted_pair_is_near_stationary() {
    let cfg = small_config(7);
    let (_tmp, samples) = dataset(3, Profile::Eval4x, &cfg);
    // The zero-output network reproduces the upsampled input, so make that the target.
    let mut pair = samples[0].clone();
    pair.gt = upsample_ms(&pair.lrms, cfg.c_max, pair.gt.height(), pair.gt.width()).unwrap();
    let start = start_checkpoint(&cfg, 2);
    let out = one_shot_tune(&start, &pair, &samples[1..], TuneMode::Full, &cfg).unwrap();
    assert!(out.losses[0] < 1e-6);
    let before = start.params.groups();
    let after = out.best.params.groups();
    for (x, y) in before.iter().zip(after.iter()) {
        for (a, b) in x.iter().zip(y.iter()) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}

#[test]
fn benchmark_report_structure() {
    let mut cfg = small_config(13);
    cfg.bench.tune_images = 2;
    cfg.tune.epochs = 40;
    let (tmp, _) = dataset(5, Profile::Eval4x, &cfg);
    let ds = load_dataset(&tmp.path().join("ds")).unwrap();
    let start = perturbed(&cfg);
    let report = run_benchmark(&start, &ds, &cfg).unwrap();
    assert_eq!(report.conditions.len(), 4);
    assert_eq!(report.tune_samples.len(), 2);
    assert_eq!(report.val_samples.len(), 3);
    for c in Condition::ALL {
        let r = report.condition(c);
        assert_eq!(r.reduced.metrics.len(), 6);
        assert_eq!(r.full.metrics.len(), 3);
        // Every condition scores exactly the shared validation images.
        let mut ids: Vec<String> = r
            .reduced
            .records
            .iter()
            .map(|rec| rec.id.rsplit('/').next().unwrap().to_string())
            .collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids, report.val_samples);
        if c == Condition::ZeroShot {
            assert!(r.mean_curve.is_empty());
            assert_eq!(r.reduced.count(), 3);
        } else {
            assert_eq!(r.mean_curve.len(), 40);
            assert_eq!(r.runs.len(), 2);
            assert!(r.runs.iter().all(|run| run.curve.len() == 40));
            assert_eq!(r.reduced.count(), 6);
        }
    }

    let out = tmp.path().join("bench");
    write_benchmark(&report, &out).unwrap();
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let rows = csv.lines().count() - 2;
    assert_eq!(rows, (3 + 3 * 6) * (6 + 3));
    for f in ["report.json", "report.md", "curves.csv", "curves.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let svg = std::fs::read_to_string(out.join("curves.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 3);

    let again = run_benchmark(&start, &ds, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&again).unwrap(), serde_json::to_string(&report).unwrap());
}
