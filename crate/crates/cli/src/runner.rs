//! Runs the transform x classifier grid and collects per-cell metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use logratio_core::datagen::{generate, preset_paperlike};
use logratio_core::seeding::derive_seed;
use logratio_core::{evaluate, fit_classifier, fit_pipeline, ClassifierSpec, LabeledDataset, MetricsReport, TransformSpec};

use crate::config::{DataSource, ExperimentConfig, Preset};
use crate::error::Result;
use crate::ingest::load_assays;
use crate::split::split;

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Ok(MetricsReport),
    Failed { kind: String, message: String },
}

/// One (transform, classifier) cell of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub transform: String,
    pub classifier: String,
    pub transform_spec: String,
    pub classifier_spec: String,
    pub cell_seed: u64,
    pub n_features: Option<usize>,
    pub outcome: Outcome,
}

impl Cell {
    pub fn metrics(&self) -> Option<&MetricsReport> {
        match &self.outcome {
            Outcome::Ok(m) => Some(m),
            Outcome::Failed { .. } => None,
        }
    }
}

/// Change relative to the baseline transform with the same classifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta {
    pub brier: f64,
    pub f1: f64,
}

/// Run-level settings echoed into every result record.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub seed: u64,
    pub baseline_transform: String,
    pub split_fraction: f64,
    pub stratified: bool,
    pub data_source: String,
    pub n_train: usize,
    pub n_test: usize,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSet {
    pub info: RunInfo,
    /// Transform ids in configured order.
    pub transforms: Vec<String>,
    /// Classifier ids in configured order.
    pub classifiers: Vec<String>,
    pub cells: BTreeMap<(String, String), Cell>,
    pub deltas: BTreeMap<(String, String), Delta>,
    pub geometric_mean_f1: BTreeMap<String, f64>,
}

impl ReportSet {
    /// Assembles a report and derives the deltas and geometric means.
    pub fn new(info: RunInfo, transforms: Vec<String>, classifiers: Vec<String>, cells: Vec<Cell>) -> Self {
        let cells: BTreeMap<_, _> = cells
            .into_iter()
            .map(|c| ((c.transform.clone(), c.classifier.clone()), c))
            .collect();
        let mut deltas = BTreeMap::new();
        for ((t, c), cell) in &cells {
            let base = cells.get(&(info.baseline_transform.clone(), c.clone())).and_then(Cell::metrics);
            if let (Some(m), Some(b)) = (cell.metrics(), base) {
                deltas.insert(
                    (t.clone(), c.clone()),
                    Delta {
                        brier: m.brier - b.brier,
                        f1: m.f1 - b.f1,
                    },
                );
            }
        }
        let mut geometric_mean_f1 = BTreeMap::new();
        for t in &transforms {
            let logs: Vec<f64> = classifiers
                .iter()
                .filter_map(|c| cells.get(&(t.clone(), c.clone())).and_then(Cell::metrics))
                .map(|m| m.f1)
                .filter(|f| *f > 0.0)
                .map(f64::ln)
                .collect();
            if !logs.is_empty() {
                geometric_mean_f1.insert(t.clone(), (logs.iter().sum::<f64>() / logs.len() as f64).exp());
            }
        }
        Self {
            info,
            transforms,
            classifiers,
            cells,
            deltas,
            geometric_mean_f1,
        }
    }

    pub fn cell(&self, transform: &str, classifier: &str) -> Option<&Cell> {
        self.cells.get(&(transform.to_string(), classifier.to_string()))
    }

    pub fn delta(&self, transform: &str, classifier: &str) -> Option<Delta> {
        self.deltas.get(&(transform.to_string(), classifier.to_string())).copied()
    }

    /// Cells in configured order: transforms outer, classifiers inner.
    pub fn ordered_cells(&self) -> impl Iterator<Item = &Cell> {
        self.transforms
            .iter()
            .flat_map(move |t| self.classifiers.iter().filter_map(move |c| self.cell(t, c)))
    }

    pub fn failures(&self) -> impl Iterator<Item = &Cell> {
        self.ordered_cells().filter(|c| c.metrics().is_none())
    }
}

/// Loads or generates the configured dataset.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    load_source(&cfg.data_source, cfg.zero_replacement)
}

pub fn load_source(source: &DataSource, zero_replacement: f64) -> Result<LabeledDataset> {
    match source {
        DataSource::Csv { path } => Ok(load_assays(path, zero_replacement)?.dataset),
        DataSource::Synthetic {
            preset,
            samples_per_zone,
            imbalance,
            seed,
        } => {
            let mut spec = match preset {
                Preset::Paperlike => preset_paperlike(),
            };
            if let Some(n) = samples_per_zone {
                spec.samples_per_zone = *n;
            }
            if let Some(i) = imbalance {
                spec.imbalance = *i;
            }
            if let Some(s) = seed {
                spec.seed = *s;
            }
            Ok(generate(&spec)?)
        }
    }
}

fn describe_source(source: &DataSource) -> String {
    match source {
        DataSource::Csv { path } => format!("csv:{}", path.display()),
        DataSource::Synthetic {
            preset,
            samples_per_zone,
            imbalance,
            seed,
        } => {
            let mut s = format!("synthetic:{}", toml_name(preset));
            if let Some(n) = samples_per_zone {
                s.push_str(&format!(";samples_per_zone={n}"));
            }
            if let Some(i) = imbalance {
                s.push_str(&format!(";imbalance={i}"));
            }
            if let Some(v) = seed {
                s.push_str(&format!(";seed={v}"));
            }
            s
        }
    }
}

fn toml_name(preset: &Preset) -> &'static str {
    match preset {
        Preset::Paperlike => "paperlike",
    }
}

/// A spec as a one-line inline TOML table.
pub fn inline_spec<T: serde::Serialize>(spec: &T) -> String {
    let value = toml::Value::try_from(spec).expect("spec serializes");
    let mut out = String::from("{");
    if let toml::Value::Table(t) = value {
        let parts: Vec<String> = t.iter().map(|(k, v)| format!(" {k} = {v}")).collect();
        out.push_str(&parts.join(","));
    }
    out.push_str(" }");
    out
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportSet> {
    cfg.validate()?;
    let dataset = load_dataset(cfg)?;
    run_on_dataset(cfg, &dataset)
}

/// Runs the grid on an already loaded dataset. Cell failures are recorded,
/// not returned.
pub fn run_on_dataset(cfg: &ExperimentConfig, dataset: &LabeledDataset) -> Result<ReportSet> {
    cfg.validate()?;
    let parts = split(dataset, cfg.split_fraction, cfg.stratified, cfg.seed)?;
    let train = dataset.subset(&parts.train);
    let test = dataset.subset(&parts.test);
    log::info!(
        "{} rows, {} classes: {} train / {} test",
        dataset.len(),
        dataset.n_classes(),
        train.len(),
        test.len()
    );

    let mut cells = Vec::new();
    for t_spec in &cfg.transforms {
        let tid = t_spec.id();
        let mut t_spec: TransformSpec = t_spec.clone();
        if t_spec.seed.is_none() {
            t_spec.seed = Some(echo_seed(cfg.seed, &format!("transform/{tid}")));
        }
        let started = Instant::now();
        let features = fit_pipeline(&t_spec, &train.rows)
            .and_then(|f| Ok((f.transform(&train.rows)?, f.transform(&test.rows)?)));
        log::info!("transform {tid}: {:.2}s", started.elapsed().as_secs_f64());

        for c_spec in &cfg.classifiers {
            let cid = c_spec.id();
            let mut c_spec: ClassifierSpec = c_spec.clone();
            if c_spec.seed.is_none() {
                c_spec.seed = Some(echo_seed(cfg.seed, &format!("{tid}/{cid}")));
            }
            let started = Instant::now();
            let (outcome, n_features) = match &features {
                Err(e) => (failed(e), None),
                Ok((x_train, x_test)) => {
                    let result = fit_classifier(&c_spec, x_train, &train.labels)
                        .and_then(|m| m.predict_proba_batch(x_test))
                        .and_then(|preds| evaluate(&preds, &test.labels, &dataset.groups));
                    let outcome = match result {
                        Ok(m) => Outcome::Ok(m),
                        Err(e) => failed(&e),
                    };
                    (outcome, Some(x_train.ncols()))
                }
            };
            match &outcome {
                Outcome::Ok(m) => log::info!("{tid} / {cid}: F1 {:.2} ({:.2}s)", m.f1, started.elapsed().as_secs_f64()),
                Outcome::Failed { kind, message } => log::warn!("{tid} / {cid} failed: {kind}: {message}"),
            }
            cells.push(Cell {
                transform: tid.clone(),
                classifier: cid,
                transform_spec: inline_spec(&t_spec),
                classifier_spec: inline_spec(&c_spec),
                cell_seed: c_spec.seed(),
                n_features,
                outcome,
            });
        }
    }

    let info = RunInfo {
        seed: cfg.seed,
        baseline_transform: cfg.baseline_transform.clone(),
        split_fraction: cfg.split_fraction,
        stratified: cfg.stratified,
        data_source: describe_source(&cfg.data_source),
        n_train: train.len(),
        n_test: test.len(),
        version: logratio_core::VERSION.to_string(),
    };
    Ok(ReportSet::new(
        info,
        cfg.transforms.iter().map(|t| t.id()).collect(),
        cfg.classifiers.iter().map(|c| c.id()).collect(),
        cells,
    ))
}

/// Derived seed kept below 2^63 so it survives a TOML round trip.
fn echo_seed(base: u64, salt: &str) -> u64 {
    derive_seed(base, salt.as_bytes()) >> 1
}

fn failed(e: &logratio_core::Error) -> Outcome {
    Outcome::Failed {
        kind: e.kind().to_string(),
        message: e.to_string(),
    }
}
