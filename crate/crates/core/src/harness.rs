//! Experiment orchestration: dataset preparation, model fitting, scoring
//! and metric collection for each (dataset, model) pair.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cae::{train_cae, CaeConfig};
use crate::data::{self, generate_toy, load_csv, ProcessedDataset, RawDataset, ToyConfig};
use crate::detector::{Detector, ReconstructionDetector};
use crate::error::{Error, Result, StageExt};
use crate::kernel::{EncodingSpec, KernelMode};
use crate::metrics::threshold_metrics;
use crate::qae::{train_qae, QaeConfig};
use crate::svr::{scale_gamma, KernelBinding, SvrParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qsvr,
    Csvr,
    Qae,
    Cae,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Cae,
        ModelKind::Csvr,
        ModelKind::Qae,
        ModelKind::Qsvr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Qsvr => "qsvr",
            ModelKind::Csvr => "csvr",
            ModelKind::Qae => "qae",
            ModelKind::Cae => "cae",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qsvr" => Ok(ModelKind::Qsvr),
            "csvr" => Ok(ModelKind::Csvr),
            "qae" => Ok(ModelKind::Qae),
            "cae" => Ok(ModelKind::Cae),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }
}

/// Parses `exact` or `shots:<N>`; the shot stream is seeded by `seed`.
pub fn parse_kernel_mode(s: &str, seed: u64) -> Result<KernelMode> {
    if s.eq_ignore_ascii_case("exact") {
        return Ok(KernelMode::Exact);
    }
    let count = s
        .strip_prefix("shots:")
        .and_then(|n| n.parse::<u64>().ok())
        .ok_or_else(|| {
            Error::invalid(format!(
                "kernel mode must be `exact` or `shots:<N>`, got {s:?}"
            ))
        })?;
    let mode = KernelMode::Shots { count, seed };
    mode.validate()?;
    Ok(mode)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DatasetSource {
    Csv { path: PathBuf, label_column: String },
    Toy(ToyConfig),
}

impl DatasetSource {
    pub fn load(&self) -> Result<RawDataset> {
        match self {
            DatasetSource::Csv { path, label_column } => load_csv(path, label_column),
            DatasetSource::Toy(cfg) => Ok(generate_toy(cfg)?.data),
        }
    }
}

/// Optional hyperparameter overrides; `None` keeps the defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub svr_c: Option<f64>,
    pub svr_eps: Option<f64>,
    pub rbf_gamma: Option<f64>,
    /// Learning rate for both autoencoders.
    pub lr: Option<f64>,
    /// Epoch count for both autoencoders.
    pub epochs: Option<usize>,
}

/// Everything except the dataset needed to fit and evaluate one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub model: ModelKind,
    pub kernel_mode: KernelMode,
    pub seed: u64,
    pub overrides: Overrides,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub settings: ModelSettings,
}

/// One (dataset, model) result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub dataset: String,
    pub model: String,
    pub auc: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: f64,
    pub nonzero_params: usize,
    pub total_params: usize,
    pub tau: f64,
    pub wall_time_seconds: f64,
}

impl ReportRow {
    /// Copy with the wall-time field zeroed, for determinism comparisons.
    pub fn without_wall_time(&self) -> ReportRow {
        ReportRow {
            wall_time_seconds: 0.0,
            ..self.clone()
        }
    }
}

fn svr_params(o: &Overrides) -> SvrParams {
    let d = SvrParams::default();
    SvrParams {
        c: o.svr_c.unwrap_or(d.c),
        epsilon: o.svr_eps.unwrap_or(d.epsilon),
        ..d
    }
}

/// Fits the selected model on `data.train`.
pub fn fit_model(
    data: &ProcessedDataset,
    settings: &ModelSettings,
) -> Result<Box<dyn Detector + Send + Sync>> {
    let o = &settings.overrides;
    let width = data.train.first().map_or(0, Vec::len);
    Ok(match settings.model {
        ModelKind::Qsvr => {
            let binding = KernelBinding::Quantum {
                spec: EncodingSpec::with_features(width)?,
                mode: settings.kernel_mode,
            };
            Box::new(ReconstructionDetector::fit(
                &data.train,
                binding,
                &svr_params(o),
            )?)
        }
        ModelKind::Csvr => {
            let gamma = match o.rbf_gamma {
                Some(g) => g,
                None => scale_gamma(&data.train)?,
            };
            Box::new(ReconstructionDetector::fit(
                &data.train,
                KernelBinding::Rbf { gamma },
                &svr_params(o),
            )?)
        }
        ModelKind::Qae => {
            let d = QaeConfig::default();
            let cfg = QaeConfig {
                encoding: EncodingSpec::with_features(width)?,
                epochs: o.epochs.unwrap_or(d.epochs),
                learning_rate: o.lr.unwrap_or(d.learning_rate),
                seed: settings.seed,
                ..d
            };
            Box::new(train_qae(&data.train, &cfg)?)
        }
        ModelKind::Cae => {
            let d = CaeConfig::default();
            let cfg = CaeConfig {
                epochs: o.epochs.unwrap_or(d.epochs),
                learning_rate: o.lr.unwrap_or(d.learning_rate),
                seed: settings.seed,
            };
            Box::new(train_cae(&data.train, &cfg)?)
        }
    })
}

/// Fits, scores the test set and collects metrics for one model.
pub fn evaluate(data: &ProcessedDataset, settings: &ModelSettings) -> Result<ReportRow> {
    let start = Instant::now();
    let model = fit_model(data, settings).stage("fit")?;
    let scores = model.score_batch(&data.test).stage("score")?;
    let m = threshold_metrics(&scores, &data.test_labels, model.tau()).stage("metrics")?;
    Ok(ReportRow {
        dataset: data.name.clone(),
        model: settings.model.name().to_string(),
        auc: m.auc,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        accuracy: m.accuracy,
        nonzero_params: model.nonzero_parameter_count(),
        total_params: model.total_parameter_count(),
        tau: model.tau(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Loads and preprocesses a dataset source.
pub fn prepare_source(source: &DatasetSource, seed: u64) -> Result<ProcessedDataset> {
    let raw = source.load().stage("load")?;
    data::prepare(&raw, seed).stage("preprocess")
}

/// Full pipeline for a single (dataset, model) pair.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportRow> {
    let data = prepare_source(&config.source, config.settings.seed)?;
    evaluate(&data, &config.settings)
}

/// Runs every model on every source. Models on one dataset run in
/// parallel; rows come back sorted by (dataset, model).
pub fn run_suite(
    sources: &[DatasetSource],
    models: &[ModelKind],
    kernel_mode: KernelMode,
    seed: u64,
    overrides: Overrides,
) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for source in sources {
        let data = prepare_source(source, seed)?;
        let batch = models
            .par_iter()
            .map(|&model| {
                evaluate(
                    &data,
                    &ModelSettings {
                        model,
                        kernel_mode,
                        seed,
                        overrides,
                    },
                )
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(batch);
    }
    rows.sort_by(|a, b| (&a.dataset, &a.model).cmp(&(&b.dataset, &b.model)));
    Ok(rows)
}

/// Mean AUC per model over all rows with a defined AUC.
pub fn mean_auc_by_model(rows: &[ReportRow]) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for r in rows {
        if let Some(a) = r.auc {
            let e = acc.entry(r.model.clone()).or_insert((0.0, 0));
            e.0 += a;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (s, n))| (k, s / n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_mode_parsing() {
        assert_eq!(parse_kernel_mode("exact", 3).unwrap(), KernelMode::Exact);
        assert_eq!(
            parse_kernel_mode("shots:512", 3).unwrap(),
            KernelMode::Shots {
                count: 512,
                seed: 3
            }
        );
        assert!(parse_kernel_mode("shots:0", 3).is_err());
        assert!(parse_kernel_mode("shots", 3).is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.name().parse::<ModelKind>().unwrap(), m);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn stage_names_in_errors() {
        let cfg = ExperimentConfig {
            source: DatasetSource::Csv {
                path: "/does/not/exist.csv".into(),
                label_column: "label".into(),
            },
            settings: ModelSettings {
                model: ModelKind::Cae,
                kernel_mode: KernelMode::Exact,
                seed: 0,
                overrides: Overrides::default(),
            },
        };
        let msg = run_experiment(&cfg).unwrap_err().to_string();
        assert!(msg.starts_with("load:"), "{msg}");
    }
}
