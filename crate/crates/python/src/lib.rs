use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rcmc::bench::{run_benchmark, Detector};
use rcmc::config::RunConfig;
use rcmc::esn::{EsnModel, ReservoirConfig};
use rcmc::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::Csv(_) | Error::NumericalFailure(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn run_config(config_toml: Option<&str>) -> PyResult<RunConfig> {
    RunConfig::from_toml(config_toml.unwrap_or("")).map_err(py_err)
}

/// Simulate on-off keyed transmission of `bits` and return the trace as a
/// dict with `time_s`, `bound_count`, `features` and `conserved`.
#[pyfunction]
#[pyo3(signature = (bits, t_b=100.0, seed=1, config_toml=None))]
fn simulate<'py>(
    py: Python<'py>,
    bits: Vec<u8>,
    t_b: f64,
    seed: u64,
    config_toml: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = run_config(config_toml)?;
    let sim = rcmc::bench::cell_sim_config(&cfg.sim, seed, 0, t_b);
    let trace = py.detach(|| rcmc::sim::run_sequence(&sim, &bits)).map_err(py_err)?;
    let features = rcmc::features::extract_features(&trace).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("time_s", trace.samples.iter().map(|s| s.time_s).collect::<Vec<_>>())?;
    d.set_item("bound_count", trace.samples.iter().map(|s| s.bound_count).collect::<Vec<_>>())?;
    d.set_item("features", features.u)?;
    d.set_item("conserved", trace.conserved)?;
    Ok(d)
}

/// Echo state network detector over per-symbol features.
#[pyclass(module = "rcmc_py")]
struct EsnDetector {
    config: ReservoirConfig,
    model: Option<EsnModel>,
}

#[pymethods]
impl EsnDetector {
    #[new]
    #[pyo3(signature = (n_r=400, spectral_radius=0.7, leak_rate=0.3, washout=300, ridge_lambda=1e-6, seed=1))]
    fn new(n_r: usize, spectral_radius: f64, leak_rate: f64, washout: usize, ridge_lambda: f64, seed: u64) -> PyResult<Self> {
        let config = ReservoirConfig {
            n_r,
            spectral_radius,
            leak_rate,
            washout,
            ridge_lambda,
            rng_seed: seed,
            ..ReservoirConfig::default()
        };
        config.validate().map_err(py_err)?;
        Ok(EsnDetector { config, model: None })
    }

    /// Fit the readout on `u[:n_fit]`; with `n_val` the threshold is chosen
    /// on the following `n_val` symbols, otherwise it stays at 0.5.
    #[pyo3(signature = (u, labels, n_fit, n_val=None))]
    fn fit(&mut self, py: Python<'_>, u: Vec<f64>, labels: Vec<u8>, n_fit: usize, n_val: Option<usize>) -> PyResult<()> {
        let val = n_val.map(|v| n_fit..n_fit + v);
        let cfg = self.config.clone();
        let model = py.detach(|| EsnModel::fit(&cfg, &u, &labels, 0..n_fit, val)).map_err(py_err)?;
        self.model = Some(model);
        Ok(())
    }

    fn scores(&self, u: Vec<f64>) -> PyResult<Vec<f64>> {
        self.fitted()?.scores(&u).map_err(py_err)
    }

    fn predict(&self, u: Vec<f64>) -> PyResult<Vec<u8>> {
        let m = self.fitted()?;
        let s = m.scores(&u).map_err(py_err)?;
        Ok(m.decide(&s))
    }

    #[getter]
    fn threshold(&self) -> PyResult<f64> {
        Ok(self.fitted()?.readout.threshold)
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.config.n_r + 1
    }

    fn __repr__(&self) -> String {
        format!("EsnDetector(n_r={}, fitted={})", self.config.n_r, self.model.is_some())
    }
}

impl EsnDetector {
    fn fitted(&self) -> PyResult<&EsnModel> {
        self.model.as_ref().ok_or_else(|| PyRuntimeError::new_err("detector is not fitted"))
    }
}

/// Largest eigenvalue magnitude of a square matrix given as rows.
#[pyfunction]
fn spectral_radius(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    rcmc::linalg::spectral_radius(&m).map_err(py_err)
}

/// Trapezoidal area under the ROC curve.
#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    Ok(rcmc::metrics::roc(&scores, &labels).map_err(py_err)?.auc)
}

/// `(accuracy, ber)`.
#[pyfunction]
fn accuracy_ber(pred: Vec<u8>, truth: Vec<u8>) -> PyResult<(f64, f64)> {
    rcmc::metrics::accuracy_ber(&pred, &truth).map_err(py_err)
}

/// Trainable parameters of a feedforward detector with the given window
/// and hidden layer sizes.
#[pyfunction]
#[pyo3(signature = (window, hidden=vec![128, 64]))]
fn mlp_param_count(window: usize, hidden: Vec<usize>) -> usize {
    rcmc::neural::MlpConfig { window, hidden, ..Default::default() }.param_count()
}

/// Run the benchmark and return one dict per report row.
#[pyfunction]
#[pyo3(signature = (config_toml=None))]
fn benchmark<'py>(py: Python<'py>, config_toml: Option<&str>) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = run_config(config_toml)?;
    let report = py
        .detach(|| run_benchmark(&cfg.sim, &cfg.detectors, &cfg.bench, None))
        .map_err(py_err)?;
    report
        .rows()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("detector", r.detector.name())?;
            d.set_item("t_b", r.t_b)?;
            d.set_item("seed", r.seed)?;
            d.set_item("accuracy", r.accuracy)?;
            d.set_item("ber", r.ber)?;
            d.set_item("param_count", r.param_count)?;
            d.set_item("latency_us_median", r.latency_us_median)?;
            d.set_item("threshold", r.threshold)?;
            Ok(d)
        })
        .collect()
}

/// Names accepted in `detectors.enabled`.
#[pyfunction]
fn detector_names() -> Vec<&'static str> {
    Detector::ALL.iter().map(|d| d.name()).collect()
}

#[pymodule]
fn rcmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_radius, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_ber, m)?)?;
    m.add_function(wrap_pyfunction!(mlp_param_count, m)?)?;
    m.add_function(wrap_pyfunction!(benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(detector_names, m)?)?;
    m.add_class::<EsnDetector>()?;
    Ok(())
}
