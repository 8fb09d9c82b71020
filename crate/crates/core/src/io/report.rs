//! CSV and markdown renderings of metric reports. All functions are pure.

use std::fmt::Write;

use crate::metrics::{MetricReport, Resolution};

/// Seed and configuration hash stamped on every emitted artifact.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: u64,
}

impl Provenance {
    pub fn hash_hex(&self) -> String {
        format!("{:016x}", self.config_hash)
    }

    /// `seed=<n> config_hash=<hex>`; parsed back by [`Provenance::parse`].
    pub fn stamp(&self) -> String {
        format!("seed={} config_hash={}", self.seed, self.hash_hex())
    }

    /// Finds a stamp anywhere in `text`.
    pub fn parse(text: &str) -> Option<Self> {
        let at = text.find("seed=")?;
        let mut seed = None;
        let mut hash = None;
        for tok in text[at..].split(|c: char| c.is_whitespace() || c == ',').take(4) {
            if let Some(v) = tok.strip_prefix("seed=") {
                seed = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("config_hash=") {
                hash = u64::from_str_radix(v.get(..16)?, 16).ok();
            }
        }
        Some(Self {
            seed: seed?,
            config_hash: hash?,
        })
    }
}

/// One row per image per metric, preceded by a `#` provenance line.
pub fn metrics_csv(report: &MetricReport, prov: &Provenance) -> String {
    let mut out = format!("# {}\nimage,metric,value\n", prov.stamp());
    for rec in &report.records {
        for (name, v) in report.metrics.iter().zip(&rec.values) {
            let _ = writeln!(out, "{},{},{}", rec.id, name, v);
        }
    }
    out
}

/// A labelled row of the summary table; either half may be absent.
pub struct SummaryRow<'a> {
    pub label: &'a str,
    pub reduced: Option<&'a MetricReport>,
    pub full: Option<&'a MetricReport>,
}

struct Column {
    header: &'static str,
    metric: &'static str,
    resolution: Resolution,
    scale: f64,
    digits: usize,
}

const COLUMNS: [Column; 9] = [
    Column { header: "PSNR↑", metric: "psnr", resolution: Resolution::Reduced, scale: 1.0, digits: 2 },
    Column { header: "SAM↓ (×10⁻²)", metric: "sam", resolution: Resolution::Reduced, scale: 100.0, digits: 2 },
    Column { header: "ERGAS↓", metric: "ergas", resolution: Resolution::Reduced, scale: 1.0, digits: 2 },
    Column { header: "D_λ↓ (×10⁻¹)", metric: "d_lambda", resolution: Resolution::Full, scale: 10.0, digits: 2 },
    Column { header: "D_S↓ (×10⁻¹)", metric: "d_s", resolution: Resolution::Full, scale: 10.0, digits: 2 },
    Column { header: "QNR↑", metric: "qnr", resolution: Resolution::Full, scale: 1.0, digits: 3 },
    Column { header: "CC↑", metric: "cc", resolution: Resolution::Reduced, scale: 1.0, digits: 4 },
    Column { header: "SSIM↑", metric: "ssim", resolution: Resolution::Reduced, scale: 1.0, digits: 4 },
    Column { header: "MAE↓", metric: "mae", resolution: Resolution::Reduced, scale: 1.0, digits: 4 },
];

/// Markdown summary of mean metrics; PSNR/SAM/ERGAS first, then D_λ/D_S/QNR.
pub fn summary_markdown(title: &str, prov: &Provenance, rows: &[SummaryRow<'_>]) -> String {
    let mut out = format!("# {title}\n\n<!-- {} -->\n\n", prov.stamp());
    out.push_str("| Condition |");
    for c in &COLUMNS {
        let _ = write!(out, " {} |", c.header);
    }
    out.push_str("\n|---|");
    for _ in &COLUMNS {
        out.push_str("---:|");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(out, "| {} |", row.label);
        for c in &COLUMNS {
            let report = match c.resolution {
                Resolution::Reduced => row.reduced,
                Resolution::Full => row.full,
            };
            match report.and_then(|r| r.mean(c.metric)) {
                Some(v) => {
                    let _ = write!(out, " {:.*} |", c.digits, v * c.scale);
                }
                None => out.push_str(" – |"),
            }
        }
        out.push('\n');
    }
    out
}

/// `epoch,<label>...` table of per-epoch curves (all curves share one length).
pub fn curves_csv(curves: &[(String, Vec<f64>)], prov: &Provenance) -> String {
    let mut out = format!("# {}\nepoch", prov.stamp());
    for (label, _) in curves {
        let _ = write!(out, ",{label}");
    }
    out.push('\n');
    let len = curves.iter().map(|c| c.1.len()).max().unwrap_or(0);
    for e in 0..len {
        let _ = write!(out, "{}", e + 1);
        for (_, ys) in curves {
            match ys.get(e) {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}
