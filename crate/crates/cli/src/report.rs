//! Result files: the machine-readable `results.csv`, one human-readable table
//! per transform, a geometric-mean summary and grouped plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use logratio_core::MetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::runner::{Cell, Outcome, ReportSet, RunInfo};

pub const RESULTS_FILE: &str = "results.csv";
pub const PLOT_BY_TRANSFORM: &str = "plot_by_transform.csv";
pub const PLOT_BY_CLASSIFIER: &str = "plot_by_classifier.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Markdown,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(format!("unknown format {other:?}, expected csv or markdown")),
        }
    }
}

/// One row of `results.csv`; field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub transform: String,
    pub classifier: String,
    pub status: String,
    pub error_kind: Option<String>,
    pub error: Option<String>,
    pub brier: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub delta_brier: Option<f64>,
    pub delta_f1: Option<f64>,
    pub top1: Option<f64>,
    pub top2: Option<f64>,
    pub top4: Option<f64>,
    pub top8: Option<f64>,
    pub binary_brier: Option<f64>,
    pub binary_precision: Option<f64>,
    pub binary_recall: Option<f64>,
    pub binary_f1: Option<f64>,
    pub n_features: Option<usize>,
    pub n_train: usize,
    pub n_test: usize,
    pub baseline_transform: String,
    pub split_fraction: f64,
    pub stratified: bool,
    pub data_source: String,
    pub seed: u64,
    pub cell_seed: u64,
    pub transform_spec: String,
    pub classifier_spec: String,
    pub version: String,
}

pub fn to_records(report: &ReportSet) -> Vec<ResultRecord> {
    let info = &report.info;
    report
        .ordered_cells()
        .map(|cell| {
            let m = cell.metrics();
            let delta = report.delta(&cell.transform, &cell.classifier);
            let top = |n: usize| m.and_then(|m| m.top_n.get(&n).copied());
            let (error_kind, error) = match &cell.outcome {
                Outcome::Ok(_) => (None, None),
                Outcome::Failed { kind, message } => (Some(kind.clone()), Some(message.clone())),
            };
            ResultRecord {
                transform: cell.transform.clone(),
                classifier: cell.classifier.clone(),
                status: if m.is_some() { "ok" } else { "failed" }.into(),
                error_kind,
                error,
                brier: m.map(|m| m.brier),
                precision: m.map(|m| m.precision),
                recall: m.map(|m| m.recall),
                f1: m.map(|m| m.f1),
                delta_brier: delta.map(|d| d.brier),
                delta_f1: delta.map(|d| d.f1),
                top1: top(1),
                top2: top(2),
                top4: top(4),
                top8: top(8),
                binary_brier: m.map(|m| m.binary_brier),
                binary_precision: m.map(|m| m.binary_precision),
                binary_recall: m.map(|m| m.binary_recall),
                binary_f1: m.map(|m| m.binary_f1),
                n_features: cell.n_features,
                n_train: info.n_train,
                n_test: info.n_test,
                baseline_transform: info.baseline_transform.clone(),
                split_fraction: info.split_fraction,
                stratified: info.stratified,
                data_source: info.data_source.clone(),
                seed: info.seed,
                cell_seed: cell.cell_seed,
                transform_spec: cell.transform_spec.clone(),
                classifier_spec: cell.classifier_spec.clone(),
                version: info.version.clone(),
            }
        })
        .collect()
}

fn record_metrics(r: &ResultRecord) -> Option<MetricsReport> {
    let mut top_n = BTreeMap::new();
    for (n, v) in [(1, r.top1), (2, r.top2), (4, r.top4), (8, r.top8)] {
        top_n.insert(n, v?);
    }
    Some(MetricsReport {
        brier: r.brier?,
        precision: r.precision?,
        recall: r.recall?,
        f1: r.f1?,
        top_n,
        binary_brier: r.binary_brier?,
        binary_precision: r.binary_precision?,
        binary_recall: r.binary_recall?,
        binary_f1: r.binary_f1?,
    })
}

/// Rebuilds a report from saved records, keeping their order.
pub fn from_records(records: &[ResultRecord]) -> Result<ReportSet> {
    let first = records
        .first()
        .ok_or_else(|| Error::Config("results file has no records".into()))?;
    let info = RunInfo {
        seed: first.seed,
        baseline_transform: first.baseline_transform.clone(),
        split_fraction: first.split_fraction,
        stratified: first.stratified,
        data_source: first.data_source.clone(),
        n_train: first.n_train,
        n_test: first.n_test,
        version: first.version.clone(),
    };
    let mut transforms: Vec<String> = Vec::new();
    let mut classifiers: Vec<String> = Vec::new();
    let mut cells = Vec::new();
    for r in records {
        if !transforms.contains(&r.transform) {
            transforms.push(r.transform.clone());
        }
        if !classifiers.contains(&r.classifier) {
            classifiers.push(r.classifier.clone());
        }
        let outcome = match (r.status.as_str(), record_metrics(r)) {
            ("ok", Some(m)) => Outcome::Ok(m),
            ("ok", None) => {
                return Err(Error::Config(format!(
                    "record {}/{} is ok but has missing metrics",
                    r.transform, r.classifier
                )))
            }
            _ => Outcome::Failed {
                kind: r.error_kind.clone().unwrap_or_default(),
                message: r.error.clone().unwrap_or_default(),
            },
        };
        cells.push(Cell {
            transform: r.transform.clone(),
            classifier: r.classifier.clone(),
            transform_spec: r.transform_spec.clone(),
            classifier_spec: r.classifier_spec.clone(),
            cell_seed: r.cell_seed,
            n_features: r.n_features,
            outcome,
        });
    }
    Ok(ReportSet::new(info, transforms, classifiers, cells))
}

pub fn write_results(report: &ReportSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in to_records(report) {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

fn pct(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.2}"))
}

fn brier(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:.4}"))
}

fn signed_pct(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:+.2}"))
}

fn signed_brier(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| format!("{v:+.4}"))
}

pub const TABLE_HEADER: [&str; 13] = [
    "Classifier",
    "Brier",
    "Precision",
    "Recall",
    "F1",
    "ΔBrier",
    "ΔF1",
    "n=1",
    "n=2",
    "n=4",
    "n=8",
    "Binary Brier",
    "Binary F1",
];

/// Rows of the per-transform table, formatted.
pub fn table_rows(report: &ReportSet, transform: &str) -> Vec<Vec<String>> {
    report
        .classifiers
        .iter()
        .filter_map(|c| report.cell(transform, c))
        .map(|cell| {
            let d = report.delta(transform, &cell.classifier);
            match &cell.outcome {
                Outcome::Ok(m) => vec![
                    cell.classifier.clone(),
                    brier(Some(m.brier)),
                    pct(Some(m.precision)),
                    pct(Some(m.recall)),
                    pct(Some(m.f1)),
                    signed_brier(d.map(|d| d.brier)),
                    signed_pct(d.map(|d| d.f1)),
                    pct(m.top_n.get(&1).copied()),
                    pct(m.top_n.get(&2).copied()),
                    pct(m.top_n.get(&4).copied()),
                    pct(m.top_n.get(&8).copied()),
                    brier(Some(m.binary_brier)),
                    pct(Some(m.binary_f1)),
                ],
                Outcome::Failed { kind, .. } => {
                    let mut row = vec![cell.classifier.clone(), format!("failed: {kind}")];
                    row.resize(TABLE_HEADER.len(), "-".into());
                    row
                }
            }
        })
        .collect()
}

fn render(format: Format, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("utf-8 fields"))
        }
        Format::Markdown => {
            let mut s = String::new();
            writeln!(s, "| {} |", header.join(" | ")).unwrap();
            writeln!(s, "|{}", "---|".repeat(header.len())).unwrap();
            for r in rows {
                writeln!(s, "| {} |", r.join(" | ")).unwrap();
            }
            Ok(s)
        }
    }
}

/// File-name-safe form of an id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_file(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).map_err(io_err(&path))?;
    written.push(path);
    Ok(())
}

/// Writes the human-readable tables and plot data. Returns the paths written.
pub fn emit_tables(report: &ReportSet, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let ext = format.extension();
    for t in &report.transforms {
        let mut text = String::new();
        if format == Format::Markdown {
            writeln!(text, "## {t}\n").unwrap();
        }
        text.push_str(&render(format, &TABLE_HEADER, &table_rows(report, t))?);
        write_file(out_dir.join(format!("table_{}.{ext}", file_stem(t))), &text, &mut written)?;
    }

    let summary: Vec<Vec<String>> = report
        .transforms
        .iter()
        .map(|t| vec![t.clone(), pct(report.geometric_mean_f1.get(t).copied())])
        .collect();
    let text = render(format, &["Transform", "Geometric mean F1"], &summary)?;
    write_file(out_dir.join(format!("summary.{ext}")), &text, &mut written)?;

    let plot_row = |t: &str, c: &str| -> Option<Vec<String>> {
        let m = report.cell(t, c)?.metrics()?;
        let d = report.delta(t, c);
        Some(vec![
            t.to_string(),
            c.to_string(),
            format!("{:.4}", m.f1),
            d.map_or(String::new(), |d| format!("{:.4}", d.f1)),
            format!("{:.6}", m.brier),
        ])
    };
    let mut by_t = Vec::new();
    for t in &report.transforms {
        by_t.extend(report.classifiers.iter().filter_map(|c| plot_row(t, c)));
    }
    let header = ["transform", "classifier", "f1", "delta_f1", "brier"];
    write_file(out_dir.join(PLOT_BY_TRANSFORM), &render(Format::Csv, &header, &by_t)?, &mut written)?;
    let mut by_c = Vec::new();
    for c in &report.classifiers {
        by_c.extend(report.transforms.iter().filter_map(|t| plot_row(t, c)));
    }
    write_file(out_dir.join(PLOT_BY_CLASSIFIER), &render(Format::Csv, &header, &by_c)?, &mut written)?;
    Ok(written)
}

/// Writes `results.csv` plus everything [`emit_tables`] writes.
pub fn emit_report(report: &ReportSet, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    if report.cells.is_empty() {
        return Err(Error::Config("nothing to report".into()));
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let results = out_dir.join(RESULTS_FILE);
    write_results(report, &results)?;
    let mut written = vec![results];
    written.extend(emit_tables(report, out_dir, format)?);
    Ok(written)
}
