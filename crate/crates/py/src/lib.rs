//! Python bindings. Feature matrices are lists of float lists, labels are
//! 0 (normal) / 1 (anomalous) integers.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qadbench_core::cae::{train_cae, CaeConfig, CaeModel};
use qadbench_core::data::{self, generate_toy as core_generate_toy, RawDataset, ToyConfig};
use qadbench_core::harness::{self, parse_kernel_mode, DatasetSource, ModelKind, Overrides};
use qadbench_core::kernel::{self, EncodingSpec, KernelMatrix, KernelMode};
use qadbench_core::metrics;
use qadbench_core::qae::{train_qae, QaeConfig, QaeModel};
use qadbench_core::svr::{self, scale_gamma, SvrParams};
use qadbench_core::{Error, KernelBinding, Label, ReconstructionDetector, ReportRow};

trait IntoPyResult<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for Result<T, Error> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(|e| {
            let mut root = &e;
            while let Error::Stage { source, .. } = root {
                root = source;
            }
            match root {
                Error::Io { .. } => PyOSError::new_err(e.to_string()),
                _ => PyValueError::new_err(e.to_string()),
            }
        })
    }
}

fn mode(shots: Option<u64>, seed: u64) -> PyResult<KernelMode> {
    let m = match shots {
        None => KernelMode::Exact,
        Some(count) => KernelMode::Shots { count, seed },
    };
    m.validate().py_err()?;
    Ok(m)
}

fn spec_for(width: usize) -> PyResult<EncodingSpec> {
    EncodingSpec::with_features(width).py_err()
}

fn width_of(rows: &[Vec<f64>]) -> PyResult<usize> {
    rows.first()
        .map(Vec::len)
        .ok_or_else(|| PyValueError::new_err("empty input rows"))
}

fn to_rows(m: &KernelMatrix) -> Vec<Vec<f64>> {
    (0..m.size()).map(|i| m.row(i)).collect()
}

/// Fidelity kernel between two feature vectors; `shots=None` is exact.
#[pyfunction]
#[pyo3(signature = (x, z, shots=None, seed=0))]
fn kernel_entry(x: Vec<f64>, z: Vec<f64>, shots: Option<u64>, seed: u64) -> PyResult<f64> {
    kernel::kernel_entry(&x, &z, &spec_for(x.len())?, mode(shots, seed)?).py_err()
}

/// Training Gram matrix of the fidelity kernel.
#[pyfunction]
#[pyo3(signature = (rows, shots=None, seed=0))]
fn gram_matrix(
    py: Python<'_>,
    rows: Vec<Vec<f64>>,
    shots: Option<u64>,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = spec_for(width_of(&rows)?)?;
    let m = mode(shots, seed)?;
    let k = py
        .detach(|| kernel::gram_matrix(&rows, &spec, m))
        .py_err()?;
    Ok(to_rows(&k))
}

/// `len(a) x len(b)` fidelity kernel values.
#[pyfunction]
#[pyo3(signature = (a, b, shots=None, seed=0))]
fn cross_kernel(
    py: Python<'_>,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    shots: Option<u64>,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = spec_for(width_of(&a)?)?;
    let m = mode(shots, seed)?;
    let k = py
        .detach(|| kernel::cross_kernel(&a, &b, &spec, m))
        .py_err()?;
    Ok(k.row_iter().map(|r| r.iter().copied().collect()).collect())
}

#[pyfunction]
fn rbf_gram(rows: Vec<Vec<f64>>, gamma: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(to_rows(&svr::rbf_gram(&rows, gamma).py_err()?))
}

/// Solves the SVR dual on a precomputed kernel. Returns `(beta, bias)`.
#[pyfunction]
#[pyo3(signature = (kernel, y, c=1.0, epsilon=0.1, tol=1e-3))]
fn fit_svr(
    kernel: Vec<Vec<f64>>,
    y: Vec<f64>,
    c: f64,
    epsilon: f64,
    tol: f64,
) -> PyResult<(Vec<f64>, f64)> {
    let k = KernelMatrix::from_rows(&kernel).py_err()?;
    let params = SvrParams {
        c,
        epsilon,
        tol,
        ..SvrParams::default()
    };
    let model = svr::fit_svr(&k, &y, &params).py_err()?;
    Ok((model.beta().to_vec(), model.bias()))
}

enum Inner {
    Reconstruction(ReconstructionDetector),
    Qae(QaeModel),
    Cae(CaeModel),
}

/// A fitted anomaly detector. Build one with the `fit_*` static methods.
#[pyclass(module = "qadbench", frozen)]
struct Detector {
    kind: &'static str,
    inner: Inner,
}

impl Detector {
    fn as_dyn(&self) -> &(dyn qadbench_core::Detector + Send + Sync) {
        match &self.inner {
            Inner::Reconstruction(d) => d,
            Inner::Qae(d) => d,
            Inner::Cae(d) => d,
        }
    }
}

#[pymethods]
impl Detector {
    /// Kernel SVR reconstruction with the quantum fidelity kernel.
    #[staticmethod]
    #[pyo3(signature = (train, c=1.0, epsilon=0.1, shots=None, seed=0))]
    fn fit_qsvr(
        py: Python<'_>,
        train: Vec<Vec<f64>>,
        c: f64,
        epsilon: f64,
        shots: Option<u64>,
        seed: u64,
    ) -> PyResult<Self> {
        let binding = KernelBinding::Quantum {
            spec: spec_for(width_of(&train)?)?,
            mode: mode(shots, seed)?,
        };
        let params = SvrParams {
            c,
            epsilon,
            ..SvrParams::default()
        };
        let d = py
            .detach(|| ReconstructionDetector::fit(&train, binding, &params))
            .py_err()?;
        Ok(Self {
            kind: "qsvr",
            inner: Inner::Reconstruction(d),
        })
    }

    /// Kernel SVR reconstruction with an RBF kernel; `gamma=None` uses
    /// `1 / (d * var(train))`.
    #[staticmethod]
    #[pyo3(signature = (train, c=1.0, epsilon=0.1, gamma=None))]
    fn fit_csvr(
        py: Python<'_>,
        train: Vec<Vec<f64>>,
        c: f64,
        epsilon: f64,
        gamma: Option<f64>,
    ) -> PyResult<Self> {
        let gamma = match gamma {
            Some(g) => g,
            None => scale_gamma(&train).py_err()?,
        };
        let params = SvrParams {
            c,
            epsilon,
            ..SvrParams::default()
        };
        let d = py
            .detach(|| ReconstructionDetector::fit(&train, KernelBinding::Rbf { gamma }, &params))
            .py_err()?;
        Ok(Self {
            kind: "csvr",
            inner: Inner::Reconstruction(d),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (train, epochs=10, learning_rate=0.01, seed=0))]
    fn fit_qae(
        py: Python<'_>,
        train: Vec<Vec<f64>>,
        epochs: usize,
        learning_rate: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = QaeConfig {
            encoding: spec_for(width_of(&train)?)?,
            epochs,
            learning_rate,
            seed,
            ..QaeConfig::default()
        };
        let m = py.detach(|| train_qae(&train, &cfg)).py_err()?;
        Ok(Self {
            kind: "qae",
            inner: Inner::Qae(m),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (train, epochs=500, learning_rate=1e-3, seed=0))]
    fn fit_cae(
        py: Python<'_>,
        train: Vec<Vec<f64>>,
        epochs: usize,
        learning_rate: f64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = CaeConfig {
            epochs,
            learning_rate,
            seed,
        };
        let m = py.detach(|| train_cae(&train, &cfg)).py_err()?;
        Ok(Self {
            kind: "cae",
            inner: Inner::Cae(m),
        })
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.kind
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.as_dyn().tau()
    }

    fn score(&self, x: Vec<f64>) -> PyResult<f64> {
        self.as_dyn().score(&x).py_err()
    }

    fn score_batch(&self, py: Python<'_>, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        py.detach(|| self.as_dyn().score_batch(&rows)).py_err()
    }

    /// `"anomalous"` when the score exceeds `tau`, else `"normal"`.
    fn classify(&self, x: Vec<f64>) -> PyResult<&'static str> {
        Ok(match self.as_dyn().classify(&x).py_err()? {
            Label::Normal => "normal",
            Label::Anomalous => "anomalous",
        })
    }

    fn nonzero_parameter_count(&self) -> usize {
        self.as_dyn().nonzero_parameter_count()
    }

    fn total_parameter_count(&self) -> usize {
        self.as_dyn().total_parameter_count()
    }

    /// Trained weights (autoencoders only).
    fn parameters(&self) -> PyResult<Vec<f64>> {
        match &self.inner {
            Inner::Qae(m) => Ok(m.params().to_vec()),
            Inner::Cae(m) => Ok(m.params().as_slice().to_vec()),
            Inner::Reconstruction(_) => Err(PyValueError::new_err(
                "kernel detectors expose dual coefficients, not weights",
            )),
        }
    }

    /// Per-feature reconstruction of `x` (kernel detectors only).
    fn reconstruct(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        match &self.inner {
            Inner::Reconstruction(d) => d.reconstruct(&x).py_err(),
            _ => Err(PyValueError::new_err(
                "reconstruct is only available for qsvr/csvr",
            )),
        }
    }

    fn __repr__(&self) -> String {
        format!("Detector(kind={:?}, tau={:.6})", self.kind, self.tau())
    }
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    metrics::roc_auc(&scores, &labels).py_err()
}

/// Thresholded metrics; undefined ratios are `None`.
#[pyfunction]
fn threshold_metrics<'py>(
    py: Python<'py>,
    scores: Vec<f64>,
    labels: Vec<u8>,
    tau: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let m = metrics::threshold_metrics(&scores, &labels, tau).py_err()?;
    let d = PyDict::new(py);
    d.set_item("auc", m.auc)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    d.set_item("accuracy", m.accuracy)?;
    d.set_item("tp", m.confusion.tp)?;
    d.set_item("fp", m.confusion.fp)?;
    d.set_item("tn", m.confusion.tn)?;
    d.set_item("fn", m.confusion.fn_)?;
    Ok(d)
}

type ToyTriple = (Vec<Vec<f64>>, Vec<u8>, Vec<f64>);

/// Toy data: `(rows, labels, plane_normal)`, normal rows first.
#[pyfunction]
#[pyo3(signature = (seed=0, n_normal=55, n_anomalous=25))]
fn generate_toy(seed: u64, n_normal: usize, n_anomalous: usize) -> PyResult<ToyTriple> {
    let t = core_generate_toy(&ToyConfig {
        seed,
        n_normal,
        n_anomalous,
        ..ToyConfig::default()
    })
    .py_err()?;
    Ok((t.data.rows, t.data.labels, t.plane_normal))
}

/// PCA to five components, seeded split and min-max scaling.
#[pyfunction]
#[pyo3(signature = (rows, labels, seed=0))]
fn prepare<'py>(
    py: Python<'py>,
    rows: Vec<Vec<f64>>,
    labels: Vec<u8>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let raw = RawDataset::new("data", rows, labels).py_err()?;
    let p = data::prepare(&raw, seed).py_err()?;
    let d = PyDict::new(py);
    d.set_item("train", p.train)?;
    d.set_item("test", p.test)?;
    d.set_item("test_labels", p.test_labels)?;
    Ok(d)
}

fn row_dict<'py>(py: Python<'py>, r: &ReportRow) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("dataset", &r.dataset)?;
    d.set_item("model", &r.model)?;
    d.set_item("auc", r.auc)?;
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("f1", r.f1)?;
    d.set_item("accuracy", r.accuracy)?;
    d.set_item("nonzero_params", r.nonzero_params)?;
    d.set_item("total_params", r.total_params)?;
    d.set_item("tau", r.tau)?;
    d.set_item("wall_time_seconds", r.wall_time_seconds)?;
    Ok(d)
}

/// Runs the selected models on CSV files and/or the toy set and returns
/// one dict per (dataset, model), sorted by dataset then model.
#[pyfunction]
#[pyo3(signature = (datasets=Vec::new(), toy=false, models=None, seed=0, kernel_mode="exact", label_column="label"))]
fn run_suite<'py>(
    py: Python<'py>,
    datasets: Vec<PathBuf>,
    toy: bool,
    models: Option<Vec<String>>,
    seed: u64,
    kernel_mode: &str,
    label_column: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut sources: Vec<DatasetSource> = datasets
        .into_iter()
        .map(|path| DatasetSource::Csv {
            path,
            label_column: label_column.to_string(),
        })
        .collect();
    if toy {
        sources.push(DatasetSource::Toy(ToyConfig {
            seed,
            ..ToyConfig::default()
        }));
    }
    if sources.is_empty() {
        return Err(PyValueError::new_err("pass datasets=[...] or toy=True"));
    }
    let kinds = match models {
        None => ModelKind::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| n.parse::<ModelKind>())
            .collect::<Result<Vec<_>, _>>()
            .py_err()?,
    };
    let mode = parse_kernel_mode(kernel_mode, seed).py_err()?;
    let rows = py
        .detach(|| harness::run_suite(&sources, &kinds, mode, seed, Overrides::default()))
        .py_err()?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

/// Mean AUC per model over result dicts with a defined `auc`.
#[pyfunction]
fn mean_auc_by_model(
    rows: Vec<Bound<'_, PyDict>>,
) -> PyResult<std::collections::BTreeMap<String, f64>> {
    let mut parsed = Vec::with_capacity(rows.len());
    for d in rows {
        let model: String = d
            .get_item("model")?
            .ok_or_else(|| PyValueError::new_err("row without `model`"))?
            .extract()?;
        let auc: Option<f64> = match d.get_item("auc")? {
            Some(v) => v.extract()?,
            None => None,
        };
        parsed.push(ReportRow {
            dataset: String::new(),
            model,
            auc,
            precision: None,
            recall: None,
            f1: None,
            accuracy: 0.0,
            nonzero_params: 0,
            total_params: 0,
            tau: 0.0,
            wall_time_seconds: 0.0,
        });
    }
    Ok(harness::mean_auc_by_model(&parsed))
}

#[pymodule]
fn qadbench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Detector>()?;
    m.add_function(wrap_pyfunction!(kernel_entry, m)?)?;
    m.add_function(wrap_pyfunction!(gram_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(cross_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(rbf_gram, m)?)?;
    m.add_function(wrap_pyfunction!(fit_svr, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(generate_toy, m)?)?;
    m.add_function(wrap_pyfunction!(prepare, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(mean_auc_by_model, m)?)?;
    Ok(())
}
