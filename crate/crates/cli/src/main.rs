use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pansim::config::RunConfig;
use pansim::degradation::Profile;
use pansim::io::checkpoint::{self, Checkpoint};
use pansim::io::report::{metrics_csv, summary_markdown, Provenance, SummaryRow};
use pansim::io::svg::{line_chart, Chart};
use pansim::io::{atomic_write, pft, read_corpus_image, write_json};
use pansim::metrics::{self, MetricReport, Resolution};
use pansim::model::{trainable_count, TuneMode};
use pansim::pipeline::{self, Dataset};
use pansim::scenes::{write_corpus, SceneStyle};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

#[derive(Parser)]
#[command(name = "pansim", version, about = "Synthetic-data pretraining and one-shot tuning for pansharpening")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Global seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Freeze,
}

#[derive(Clone, Copy, ValueEnum)]
enum StyleArg {
    Generic,
    Aerial,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ResolutionArg {
    Reduced,
    Full,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Write a procedural image corpus (PPM files).
    Scenes {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 96)]
        size: usize,
        #[arg(long, value_enum, default_value = "generic")]
        style: StyleArg,
    },
    /// Build a simulated dataset from a corpus directory.
    Synth {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        count: usize,
        /// pretrain, eval_4x or eval_8x
        #[arg(long, default_value = "pretrain")]
        profile: String,
    },
    /// Pretrain from scratch on a dataset; writes best.pfck, final.pfck and train_log.csv.
    Pretrain {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Zero-shot evaluation of a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        resolution: ResolutionArg,
    },
    /// One-shot tuning on a single dataset sample; all other samples validate.
    Tune {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Zero-shot, freeze, full and scratch comparison.
    Bench {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Score a prediction against a reference, or a fusion result without one.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        /// Reference image for the reduced-resolution suite.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// PAN and LRMS for the no-reference suite.
        #[arg(long, requires = "lrms")]
        pan: Option<PathBuf>,
        #[arg(long, requires = "pan")]
        lrms: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        ratio: usize,
    },
    /// Print headers and provenance of a tensor, checkpoint, dataset or report.
    Inspect { path: PathBuf },
}

fn load_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(g: &GlobalOpts) -> Result<&Path> {
    match &g.out {
        Some(p) => Ok(p),
        None => bail!("--out is required for this command"),
    }
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    pipeline::load_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn print_means(label: &str, r: &MetricReport) {
    let parts: Vec<String> = r
        .metrics
        .iter()
        .zip(&r.means)
        .map(|(m, v)| format!("{m}={v:.4}"))
        .collect();
    println!("{label}: {}", parts.join(" "));
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Scenes { count, size, style } => {
            let cfg = load_config(g)?;
            let style = match style {
                StyleArg::Generic => SceneStyle::Generic,
                StyleArg::Aerial => SceneStyle::Aerial,
            };
            let dir = out_dir(g)?;
            write_corpus(dir, *count, *size, style, cfg.seed)?;
            println!("wrote {count} scenes to {}", dir.display());
        }
        Command::Synth { corpus, count, profile } => {
            let cfg = load_config(g)?;
            let profile: Profile = profile.parse()?;
            let m = pipeline::build_dataset(corpus, out_dir(g)?, *count, profile, &cfg)?;
            println!(
                "dataset: {} samples, profile {}, seed {}, config_hash {}",
                m.samples.len(),
                profile.name(),
                m.seed,
                m.config_hash
            );
        }
        Command::Pretrain { dataset } => {
            let cfg = load_config(g)?;
            let dir = out_dir(g)?;
            let ds = load_dataset(dataset)?;
            let out = pipeline::pretrain(&ds.samples, &cfg)?;
            out.best.save(&dir.join("best.pfck"))?;
            out.last.save(&dir.join("final.pfck"))?;
            let prov = Provenance {
                seed: cfg.seed,
                config_hash: cfg.hash(),
            };
            write_text(&dir.join("train_log.csv"), &pipeline::log_csv(&out.log, &prov))?;
            let series = vec![("validation".to_string(), out.log.iter().map(|e| e.val_psnr).collect())];
            let svg = line_chart(
                &Chart {
                    title: "Pretraining",
                    x_label: "epoch",
                    y_label: "validation PSNR (dB)",
                    series: &series,
                },
                &prov,
            );
            write_text(&dir.join("train_curve.svg"), &svg)?;
            println!(
                "trained on {} samples ({} held out); best epoch {} at {:.3} dB",
                out.train_count,
                out.val_count,
                out.best.epoch,
                out.log[out.best.epoch as usize - 1].val_psnr
            );
        }
        Command::Eval {
            checkpoint,
            dataset,
            resolution,
        } => {
            let dir = out_dir(g)?;
            let ck = load_checkpoint(checkpoint)?;
            let ds = load_dataset(dataset)?;
            let ratio = ds.ratio().round() as usize;
            let prov = Provenance {
                seed: ck.seed,
                config_hash: ck.config_hash,
            };
            let reduced = match resolution {
                ResolutionArg::Full => None,
                _ => Some(pipeline::eval_reduced(&ck.params, &ds.samples, ratio as f64)?),
            };
            let full = match resolution {
                ResolutionArg::Reduced => None,
                _ => Some(pipeline::eval_full(&ck.params, &ds.samples, ratio)?),
            };
            for (name, r) in [("eval_reduced", &reduced), ("eval_full", &full)] {
                if let Some(r) = r {
                    write_text(&dir.join(format!("{name}.csv")), &metrics_csv(r, &prov))?;
                    write_json(&dir.join(format!("{name}.json")), r)?;
                    print_means(name, r);
                }
            }
            let md = summary_markdown(
                "Zero-shot evaluation",
                &prov,
                &[SummaryRow {
                    label: "zero_shot",
                    reduced: reduced.as_ref(),
                    full: full.as_ref(),
                }],
            );
            write_text(&dir.join("eval.md"), &md)?;
        }
        Command::Tune {
            checkpoint,
            dataset,
            index,
            mode,
        } => {
            let cfg = load_config(g)?;
            let dir = out_dir(g)?;
            let ck = load_checkpoint(checkpoint)?;
            let ds = load_dataset(dataset)?;
            if *index >= ds.samples.len() || ds.samples.len() < 2 {
                bail!("index {index} out of range, or too few samples to validate");
            }
            let mut val = ds.samples.clone();
            let pair = val.remove(*index);
            let mode = match mode {
                ModeArg::Full => TuneMode::Full,
                ModeArg::Freeze => TuneMode::Freeze,
            };
            let out = pipeline::one_shot_tune(&ck, &pair, &val, mode, &cfg)?;
            out.best.save(&dir.join("tuned.pfck"))?;
            let prov = Provenance {
                seed: ck.seed,
                config_hash: ck.config_hash,
            };
            let mut csv = format!("# {}\nepoch,loss,val_psnr\n", prov.stamp());
            for (e, (l, v)) in out.losses.iter().zip(&out.curve).enumerate() {
                csv.push_str(&format!("{},{l},{v}\n", e + 1));
            }
            write_text(&dir.join("tune_log.csv"), &csv)?;
            println!(
                "{} tuning: {} trainable parameters, best epoch {} at {:.3} dB",
                mode.name(),
                trainable_count(&ck.params, mode),
                out.best_epoch,
                out.curve[out.best_epoch - 1]
            );
        }
        Command::Bench { checkpoint, dataset } => {
            let cfg = load_config(g)?;
            let dir = out_dir(g)?;
            let ck = load_checkpoint(checkpoint)?;
            let ds = load_dataset(dataset)?;
            let report = pipeline::run_benchmark(&ck, &ds, &cfg)?;
            pipeline::write_benchmark(&report, dir)?;
            for c in &report.conditions {
                println!("{:>9}: {:.3} dB", c.condition.name(), c.reduced.mean("psnr").unwrap_or(f64::NAN));
            }
        }
        Command::Metrics {
            pred,
            gt,
            pan,
            lrms,
            ratio,
        } => {
            let p = read_corpus_image(pred)?;
            if gt.is_none() && pan.is_none() {
                bail!("give --gt and/or --pan with --lrms");
            }
            if let Some(gt) = gt {
                let mut r = MetricReport::new(Resolution::Reduced);
                r.push("pred", metrics::reduced_metrics(&p, &read_corpus_image(gt)?, *ratio as f64)?);
                print_means("reduced", &r);
            }
            if let (Some(pan), Some(lrms)) = (pan, lrms) {
                let pan = read_corpus_image(pan)?;
                let lrms = read_corpus_image(lrms)?;
                let lrpan = pipeline::wald_lowpass(&pan, *ratio)?;
                let mut r = MetricReport::new(Resolution::Full);
                r.push("pred", metrics::full_metrics(&p, &pan, &lrms, &lrpan)?);
                print_means("full", &r);
            }
        }
        Command::Inspect { path } => inspect(path)?,
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    let path = if path.is_dir() {
        pipeline::manifest_path(path)
    } else {
        path.to_path_buf()
    };
    let bytes = std::fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(pft::MAGIC) {
        let tensors = pft::decode_all(&bytes)?;
        for (i, t) in tensors.iter().enumerate() {
            let (c, h, w) = t.shape();
            println!(
                "PFT1 record {i}: {c} x {h} x {w}  min {:.4} max {:.4} mean {:.4}",
                t.min_value(),
                t.max_value(),
                t.mean()
            );
        }
        return Ok(());
    }
    if bytes.starts_with(checkpoint::MAGIC) {
        let ck = Checkpoint::from_bytes(&bytes)?;
        let h = checkpoint::read_header(&bytes)?;
        println!("PFCK v{}: c_max {} hidden {} epoch {}", h.version, h.c_max, h.hidden, h.epoch);
        println!(
            "parameters {} (freeze-tunable {}), optimizer state {}",
            ck.params.param_count(),
            trainable_count(&ck.params, TuneMode::Freeze),
            if ck.optimizer.is_some() { "present" } else { "absent" }
        );
        println!("seed={} config_hash={:016x}", h.seed, h.config_hash);
        return Ok(());
    }
    if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        let t = read_corpus_image(&path)?;
        let (c, h, w) = t.shape();
        println!("PNM image: {c} x {h} x {w}");
        return Ok(());
    }
    let text = String::from_utf8_lossy(&bytes);
    if let Ok(v) = serde_json::from_str::<serde_json::Value>(&text) {
        let seed = v.get("seed").and_then(|s| s.as_u64());
        let hash = v.get("config_hash").and_then(|s| s.as_str());
        if let Some(n) = v.get("samples").and_then(|s| s.as_array()) {
            println!("dataset manifest: {} samples, profile {}", n.len(), v["profile"]);
        }
        match (seed, hash) {
            (Some(s), Some(h)) => println!("seed={s} config_hash={h}"),
            _ => bail!("{}: JSON without provenance fields", path.display()),
        }
        return Ok(());
    }
    match Provenance::parse(&text) {
        Some(p) => println!("{}", p.stamp()),
        None => bail!("{}: unrecognized file", path.display()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
