//! CSV and SVG artifacts. All writers are deterministic: the same inputs
//! produce the same bytes, so re-emission overwrites cleanly.

use std::fmt::Write as _;
use std::path::Path;

use crate::bpsk::{LabeledDataset, LabeledSample, Provenance};
use crate::error::Error;
use crate::harness::{EvalReport, NormScatterRecord, TrainReport};

/// 17 significant digits: enough to round-trip any f64 exactly.
fn full(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn render_dataset_csv(dataset: &LabeledDataset) -> String {
    let mut out = String::from("x,y,snr_db\n");
    for s in &dataset.samples {
        let _ = writeln!(out, "{},{},{}", full(s.x), full(s.label), full(s.snr_db));
    }
    out
}

pub fn parse_dataset_csv(text: &str) -> Result<LabeledDataset, Error> {
    let ctx = "dataset csv";
    let mut lines = text.lines();
    match lines.next().map(str::trim) {
        Some("x,y,snr_db") => {}
        other => return Err(Error::parse(ctx, format!("bad header {other:?}"))),
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(ctx, format!("row {}: expected 3 fields", i + 2)));
        }
        let num = |f: &str| {
            f.parse::<f64>().map_err(|e| Error::parse(ctx, format!("row {}: '{f}': {e}", i + 2)))
        };
        let (x, label, snr_db) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
        if label != 1.0 && label != -1.0 {
            return Err(Error::InvalidLabel(label));
        }
        samples.push(LabeledSample { x, label, snr_db });
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(LabeledDataset { samples, provenance: Provenance { scheme: None, seed: 0 } })
}

pub fn render_metrics_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,val_acc,lr\n");
    for e in &report.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.epoch,
            full(e.train_loss),
            full(e.val_loss),
            full(e.val_acc),
            full(e.lr)
        );
    }
    out
}

pub fn render_eval_csv(report: &EvalReport) -> String {
    let mut out = String::from("snr_db,pe,optimal_pe,n\n");
    for r in &report.per_snr {
        let _ = writeln!(out, "{},{},{},{}", full(r.snr_db), full(r.pe), full(r.optimal_pe), r.n);
    }
    out
}

pub fn render_scatter_csv(records: &[NormScatterRecord]) -> String {
    let mut out = String::from("n,snr_db,norm,label,phi,miscls\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            full(r.snr_db),
            full(r.norm),
            full(r.label),
            full(r.phi),
            u8::from(r.miscls)
        );
    }
    out
}

/// Self-contained SVG scatter of penultimate norm vs. sample index,
/// correctly-classified samples in blue, misclassified in red.
pub fn render_scatter_svg(records: &[NormScatterRecord]) -> String {
    const W: f64 = 900.0;
    const H: f64 = 540.0;
    const ML: f64 = 70.0; // left margin
    const MR: f64 = 20.0;
    const MT: f64 = 30.0;
    const MB: f64 = 60.0;
    let plot_w = W - ML - MR;
    let plot_h = H - MT - MB;

    let n_max = records.iter().map(|r| r.n).max().unwrap_or(0).max(1) as f64;
    let norm_max = records.iter().map(|r| r.norm).fold(0.0f64, f64::max).max(1e-12);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    // axes
    let _ = writeln!(
        out,
        "<line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        H - MB,
        W - MR
    );
    let _ = writeln!(
        out,
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    );
    // axis labels and ticks
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">sample index n</text>",
        ML + plot_w / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 18 {0})\">penultimate norm</text>",
        MT + plot_h / 2.0
    );
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let x = ML + frac * plot_w;
        let y = H - MB - frac * plot_h;
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{:.0}</text>",
            H - MB + 16.0,
            frac * n_max
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{y:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{:.3}</text>",
            ML - 6.0,
            frac * norm_max
        );
    }
    for r in records {
        let x = ML + (r.n as f64 / n_max) * plot_w;
        let y = H - MB - (r.norm / norm_max) * plot_h;
        let color = if r.miscls { "#d62728" } else { "#1f77b4" };
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\" fill=\"{color}\" fill-opacity=\"0.6\"/>");
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">correct</text>",
        W - 150.0
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">misclassified</text>",
        W - 95.0
    );
    out.push_str("</svg>\n");
    out
}

fn write_file(path: &Path, content: &str) -> Result<(), Error> {
    std::fs::write(path, content).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Write every available artifact into `out_dir`:
/// `metrics.csv`, `eval.csv`, `scatter.csv`, and `scatter.svg`.
pub fn emit_reports(
    train: Option<&TrainReport>,
    eval: Option<&EvalReport>,
    scatter: Option<&[NormScatterRecord]>,
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>, Error> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    let mut written = Vec::new();
    if let Some(report) = train {
        let path = out_dir.join("metrics.csv");
        write_file(&path, &render_metrics_csv(report))?;
        written.push(path);
    }
    if let Some(report) = eval {
        let path = out_dir.join("eval.csv");
        write_file(&path, &render_eval_csv(report))?;
        written.push(path);
    }
    if let Some(records) = scatter {
        let path = out_dir.join("scatter.csv");
        write_file(&path, &render_scatter_csv(records))?;
        written.push(path);
        let path = out_dir.join("scatter.svg");
        write_file(&path, &render_scatter_svg(records))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpsk::generate_samples;
    use crate::harness::{EpochRecord, SnrResult, StopReason};

    #[test]
    fn dataset_csv_round_trip_is_bit_exact() {
        let ds = generate_samples(5.0, 100, 3).unwrap();
        let parsed = parse_dataset_csv(&render_dataset_csv(&ds)).unwrap();
        for (a, b) in ds.samples.iter().zip(&parsed.samples) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.label, b.label);
            assert_eq!(a.snr_db, b.snr_db);
        }
    }

    #[test]
    fn dataset_csv_rejects_malformed_input() {
        assert!(parse_dataset_csv("nope\n1,2,3\n").is_err());
        assert!(parse_dataset_csv("x,y,snr_db\n1,2\n").is_err());
        assert!(parse_dataset_csv("x,y,snr_db\n1,0.5,0\n").is_err(), "label must be +-1");
        assert!(parse_dataset_csv("x,y,snr_db\n").is_err(), "empty dataset");
    }

    #[test]
    fn csv_headers_and_shapes() {
        let train = TrainReport {
            epochs: vec![EpochRecord { epoch: 1, train_loss: 0.5, val_loss: 0.6, val_acc: 0.7, lr: 0.01 }],
            stopped_at: 1,
            stop_reason: StopReason::EpochBudget,
            lr_reductions: vec![],
        };
        let metrics = render_metrics_csv(&train);
        assert!(metrics.starts_with("epoch,train_loss,val_loss,val_acc,lr\n"));
        assert_eq!(metrics.lines().count(), 2);

        let eval = EvalReport {
            per_snr: vec![
                SnrResult { snr_db: 0.0, pe: 0.1, optimal_pe: 0.0786, n: 10 },
                SnrResult { snr_db: 5.0, pe: 0.2, optimal_pe: 0.006, n: 10 },
            ],
            average_pe: 0.15,
            total_n: 20,
        };
        let csv = render_eval_csv(&eval);
        assert!(csv.starts_with("snr_db,pe,optimal_pe,n\n"));
        assert_eq!(csv.lines().count(), 1 + eval.per_snr.len());

        assert_eq!(render_scatter_csv(&[]), "n,snr_db,norm,label,phi,miscls\n");
    }

    #[test]
    fn svg_is_self_contained_and_deterministic() {
        let records = vec![
            NormScatterRecord { n: 0, snr_db: 0.0, norm: 1.0, label: 1.0, phi: 0.5, miscls: false },
            NormScatterRecord { n: 1, snr_db: 0.0, norm: 2.0, label: -1.0, phi: 0.5, miscls: true },
        ];
        let svg = render_scatter_svg(&records);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("circle"));
        assert_eq!(svg, render_scatter_svg(&records));
        // header-only / empty input still renders a valid document
        assert!(render_scatter_svg(&[]).starts_with("<svg"));
    }

    #[test]
    fn emit_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let eval = EvalReport {
            per_snr: vec![SnrResult { snr_db: 0.0, pe: 0.1, optimal_pe: 0.0786, n: 10 }],
            average_pe: 0.1,
            total_n: 10,
        };
        let records: Vec<NormScatterRecord> = vec![];
        let written = emit_reports(None, Some(&eval), Some(&records), dir.path()).unwrap();
        assert_eq!(written.len(), 3);
        let again = emit_reports(None, Some(&eval), Some(&records), dir.path()).unwrap();
        for path in &again {
            assert!(path.exists());
        }
        let bytes1 = std::fs::read(dir.path().join("eval.csv")).unwrap();
        assert!(bytes1.starts_with(b"snr_db,"));
    }
}
