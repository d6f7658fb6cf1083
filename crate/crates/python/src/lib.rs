use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use riskscore::bounds::{aunbc_bounds as core_aunbc_bounds, auroc_lower as core_auroc_lower, EnvelopeQuery};
use riskscore::calibration::improve_aunbc as core_improve;
use riskscore::cv::{run_cv, CvPlan};
use riskscore::metrics::evaluate as core_evaluate;
use riskscore::report::Scorecard;
use riskscore::solver::{exact_enumerate, sa_train};
use riskscore::synthetic::{synth_boundary as core_boundary, synth_correlated as core_correlated, RngStream};

fn err(e: riskscore::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn labels_u8(labels: &[i64]) -> PyResult<Vec<u8>> {
    labels
        .iter()
        .enumerate()
        .map(|(row, &y)| match y {
            0 | 1 => Ok(y as u8),
            _ => Err(err(riskscore::Error::NonBinaryLabel { row })),
        })
        .collect()
}

/// Decision thresholds and their weights.
#[pyclass(name = "ThresholdGrid", from_py_object)]
#[derive(Clone)]
struct PyGrid {
    inner: riskscore::ThresholdGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (thresholds, weights=None))]
    fn new(thresholds: Vec<f64>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let inner = match weights {
            Some(w) => riskscore::ThresholdGrid::with_weights(thresholds, w),
            None => riskscore::ThresholdGrid::new(thresholds),
        }
        .map_err(err)?;
        Ok(PyGrid { inner })
    }

    /// Grid `1/k, ..., (k-1)/k`.
    #[staticmethod]
    fn uniform(k: usize) -> PyResult<Self> {
        Ok(PyGrid {
            inner: riskscore::ThresholdGrid::uniform(k).map_err(err)?,
        })
    }

    #[getter]
    fn thresholds(&self) -> Vec<f64> {
        self.inner.inner().to_vec()
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.inner.points().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("ThresholdGrid({:?})", self.inner.inner())
    }
}

/// Trained integer scoring model.
#[pyclass(name = "ScoreModel", from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: riskscore::ScoreModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModel {
            inner: riskscore::ScoreModel::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn coefficients(&self) -> Vec<i64> {
        self.inner.coefficients().to_vec()
    }

    #[getter]
    fn intercepts(&self) -> Vec<i64> {
        self.inner.intercepts().to_vec()
    }

    #[getter]
    fn risk_levels(&self) -> Vec<f64> {
        self.inner.risk_levels().to_vec()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    fn num_nonzero(&self) -> usize {
        self.inner.num_nonzero()
    }

    /// `(score, risk)` for one feature row.
    fn predict_one(&self, row: Vec<f64>) -> PyResult<(f64, f64)> {
        self.inner.predict(&row).map_err(err)
    }

    /// Risk predictions for a list of rows.
    fn predict(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        rows.iter()
            .map(|r| self.inner.predict(r).map(|(_, risk)| risk).map_err(err))
            .collect()
    }

    /// Points table followed by the score band table.
    fn scorecard(&self) -> PyResult<String> {
        let card = Scorecard::new(&self.inner, None).map_err(err)?;
        Ok(format!("{}\n{}", card.points_table(), card.band_table()))
    }

    fn __repr__(&self) -> String {
        format!(
            "ScoreModel(coefficients={:?}, intercepts={:?})",
            self.inner.coefficients(),
            self.inner.intercepts()
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    p: usize,
    c0: f64,
    lambda_min: i64,
    lambda_max: i64,
    t_max: i64,
    seed: u64,
    restarts: usize,
    sa_initial_temp: f64,
    sa_cooling_rate: f64,
    sa_iters_per_temp: usize,
) -> PyResult<riskscore::SolverConfig> {
    let mut config = riskscore::SolverConfig::new(p).with_bounds(lambda_min, lambda_max);
    config.c0 = c0;
    config.t_max = t_max;
    config.seed = seed;
    config.restarts = restarts;
    config.sa_initial_temp = sa_initial_temp;
    config.sa_cooling_rate = sa_cooling_rate;
    config.sa_iters_per_temp = sa_iters_per_temp;
    config.validate(p).map_err(err)?;
    Ok(config)
}

fn dataset(x: Vec<Vec<f64>>, y: &[i64], names: Option<Vec<String>>) -> PyResult<riskscore::BinaryDataset> {
    match names {
        Some(n) => riskscore::BinaryDataset::new(x, y, n),
        None => riskscore::BinaryDataset::unnamed(x, y),
    }
    .map_err(err)
}

/// Trains a model; returns `(model, loss)`.
#[pyfunction]
#[pyo3(signature = (x, y, grid, method="sa", c0=1e-3, lambda_min=-10, lambda_max=10, t_max=100, seed=0,
    restarts=1, sa_initial_temp=1e-3, sa_cooling_rate=1e-6, sa_iters_per_temp=10, feature_names=None))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<i64>,
    grid: &PyGrid,
    method: &str,
    c0: f64,
    lambda_min: i64,
    lambda_max: i64,
    t_max: i64,
    seed: u64,
    restarts: usize,
    sa_initial_temp: f64,
    sa_cooling_rate: f64,
    sa_iters_per_temp: usize,
    feature_names: Option<Vec<String>>,
) -> PyResult<(PyModel, f64)> {
    let data = dataset(x, &y, feature_names)?;
    let config = build_config(
        data.p(), c0, lambda_min, lambda_max, t_max, seed, restarts, sa_initial_temp, sa_cooling_rate,
        sa_iters_per_temp,
    )?;
    let result = py
        .detach(|| match method {
            "sa" => sa_train(&data, &grid.inner, &config, None),
            "exact" => exact_enumerate(&data, &grid.inner, &config),
            other => Err(riskscore::Error::InvalidConfig(format!("unknown method `{other}`"))),
        })
        .map_err(err)?;
    Ok((PyModel { inner: result.model }, result.loss))
}

/// Metric report as a dict.
#[pyfunction]
#[pyo3(signature = (preds, labels, grid, c0=0.0, num_nonzero=0))]
fn evaluate(
    py: Python<'_>,
    preds: Vec<f64>,
    labels: Vec<i64>,
    grid: &PyGrid,
    c0: f64,
    num_nonzero: usize,
) -> PyResult<Py<PyAny>> {
    let preds = riskscore::PredictionVector::new(preds).map_err(err)?;
    let report = core_evaluate(&preds, &labels_u8(&labels)?, &grid.inner, None, num_nonzero, c0).map_err(err)?;
    json_to_py(py, &report)
}

/// `(lower, upper)` AUNBC envelope at an AUROC.
#[pyfunction]
fn aunbc_bounds(auroc: f64, prevalence: f64, grid: &PyGrid) -> PyResult<(f64, f64)> {
    let query = EnvelopeQuery::new(prevalence, grid.inner.clone()).map_err(err)?;
    core_aunbc_bounds(auroc, &query).map_err(err)
}

/// Smallest AUROC consistent with an AUNBC.
#[pyfunction]
fn auroc_lower(aunbc: f64, prevalence: f64, grid: &PyGrid) -> PyResult<f64> {
    let query = EnvelopeQuery::new(prevalence, grid.inner.clone()).map_err(err)?;
    core_auroc_lower(aunbc, &query).map_err(err)
}

/// Repaired predictions and the repair report.
#[pyfunction]
#[pyo3(signature = (preds, labels, grid, preserve_order=false))]
fn improve_aunbc(
    py: Python<'_>,
    preds: Vec<f64>,
    labels: Vec<i64>,
    grid: &PyGrid,
    preserve_order: bool,
) -> PyResult<(Vec<f64>, Py<PyAny>)> {
    let preds = riskscore::PredictionVector::new(preds).map_err(err)?;
    let (out, report) = core_improve(&preds, &labels_u8(&labels)?, &grid.inner, preserve_order).map_err(err)?;
    Ok((out.into_inner(), json_to_py(py, &report)?))
}

#[pyfunction]
#[pyo3(signature = (labels, r, seed=0))]
fn synth_correlated(labels: Vec<i64>, r: f64, seed: u64) -> PyResult<Vec<f64>> {
    let preds = core_correlated(&labels_u8(&labels)?, r, &mut RngStream::new(seed)).map_err(err)?;
    Ok(preds.into_inner())
}

#[pyfunction]
fn synth_boundary(labels: Vec<i64>, auroc: f64, grid: &PyGrid) -> PyResult<Vec<f64>> {
    let preds = core_boundary(&labels_u8(&labels)?, auroc, &grid.inner).map_err(err)?;
    Ok(preds.into_inner())
}

/// Cross-validation report as a dict.
#[pyfunction]
#[pyo3(signature = (x, y, grid, folds=5, repeats=1, seed=0, c0=1e-3, lambda_min=-10, lambda_max=10,
    t_max=100, sa_cooling_rate=1e-6))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<i64>,
    grid: &PyGrid,
    folds: usize,
    repeats: usize,
    seed: u64,
    c0: f64,
    lambda_min: i64,
    lambda_max: i64,
    t_max: i64,
    sa_cooling_rate: f64,
) -> PyResult<Py<PyAny>> {
    let data = dataset(x, &y, None)?;
    let config = build_config(data.p(), c0, lambda_min, lambda_max, t_max, seed, 1, 1e-3, sa_cooling_rate, 10)?;
    let plan = CvPlan {
        folds,
        repeats,
        seed,
        stratified: true,
    };
    let report = py.detach(|| run_cv(&data, &grid.inner, &config, &plan)).map_err(err)?;
    json_to_py(py, &report)
}

#[pymodule]
fn riskscore_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(aunbc_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(auroc_lower, m)?)?;
    m.add_function(wrap_pyfunction!(improve_aunbc, m)?)?;
    m.add_function(wrap_pyfunction!(synth_correlated, m)?)?;
    m.add_function(wrap_pyfunction!(synth_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    Ok(())
}
