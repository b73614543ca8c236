//! Python bindings. Errors from the core library surface as `ValueError`.

use dvs_core as core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: core::DvsError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Visibility edges `(i, j)` with `i < j`, 0-based.
#[pyfunction]
fn visibility_edges(values: Vec<f64>) -> PyResult<Vec<(usize, usize)>> {
    Ok(core::visibility_adjacency(&values).map_err(err)?.edges())
}

#[pyfunction]
fn degrees(values: Vec<f64>) -> PyResult<Vec<usize>> {
    let adj = core::visibility_adjacency(&values).map_err(err)?;
    Ok(core::node_degrees(&adj))
}

/// Dense value-weighted adjacency, row-normalized by degree.
#[pyfunction]
fn enhanced_matrix(values: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
    let adj = core::visibility_adjacency(&values).map_err(err)?;
    Ok(core::enhanced_matrix(&adj, &values)
        .map_err(err)?
        .to_dense())
}

#[pyfunction]
#[pyo3(signature = (values, abscissa=None))]
fn dvs_transform(values: Vec<f64>, abscissa: Option<Vec<f64>>) -> PyResult<Vec<f64>> {
    let zip = match abscissa {
        Some(x) => core::dvs_transform_at(&x, &values),
        None => core::dvs_transform(&values),
    };
    Ok(zip.map_err(err)?.z)
}

/// Returns a dict-like JSON string so optional fields and flags keep their shape.
#[pyfunction]
#[pyo3(signature = (preds, actuals, absolute_smape=false))]
fn evaluate_metrics(preds: Vec<f64>, actuals: Vec<f64>, absolute_smape: bool) -> PyResult<String> {
    let mode = if absolute_smape {
        core::SmapeMode::Absolute
    } else {
        core::SmapeMode::Literal
    };
    core::evaluate_metrics_with(&preds, &actuals, mode)
        .and_then(|r| r.to_json())
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (length=295, trend_slope=20.0, seasonal_amplitude=150.0, seasonal_period=12.0, noise_sigma=30.0, base_level=4700.0, seed=7))]
fn synth_series(
    length: usize,
    trend_slope: f64,
    seasonal_amplitude: f64,
    seasonal_period: f64,
    noise_sigma: f64,
    base_level: f64,
    seed: u64,
) -> PyResult<Vec<f64>> {
    let spec = core::SynthSpec {
        length,
        trend_slope,
        seasonal_amplitude,
        seasonal_period,
        noise_sigma,
        base_level,
        seed,
    };
    Ok(core::synth_series(&spec).map_err(err)?.values().to_vec())
}

/// `(inputs, targets)` for every length-`w` window with a following value.
#[pyfunction]
fn make_windows(values: Vec<f64>, w: usize) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let series = core::TimeSeries::from_values(values).map_err(err)?;
    let ws = core::make_windows(&series, w).map_err(err)?;
    let targets = ws.targets();
    Ok((ws.windows.into_iter().map(|w| w.input).collect(), targets))
}

#[pyfunction]
fn sma_forecast(window: Vec<f64>, k: usize) -> PyResult<f64> {
    core::sma_forecast(&window, k).map_err(err)
}

#[pyfunction]
fn ses_forecast(window: Vec<f64>, alpha: f64) -> PyResult<f64> {
    core::ses_forecast(&window, alpha).map_err(err)
}

#[pyfunction]
fn vg_randomwalk_forecast(window: Vec<f64>) -> PyResult<f64> {
    core::vg_randomwalk_forecast(&window, &core::RandomWalkConfig::default()).map_err(err)
}

/// A trained network with its standardizer.
#[pyclass(name = "Model")]
struct PyModel {
    inner: core::TrainedModel,
    loss_curve: Vec<f64>,
}

#[pymethods]
impl PyModel {
    /// Train a network on every window of `values`. `config` is the JSON
    /// training section; missing fields take their defaults.
    #[staticmethod]
    #[pyo3(signature = (values, window_len=30, method="dvs-cnn", config=None, seed=7))]
    fn train(
        py: Python<'_>,
        values: Vec<f64>,
        window_len: usize,
        method: &str,
        config: Option<&str>,
        seed: u64,
    ) -> PyResult<Self> {
        let method: core::Method = method.parse().map_err(err)?;
        if !method.is_neural() {
            return Err(PyValueError::new_err(format!(
                "{} is not a network method",
                method.name()
            )));
        }
        let mut cfg: core::TrainConfig = match config {
            Some(text) => core::TrainConfig::from_json(text).map_err(err)?,
            None => core::TrainConfig::default(),
        };
        cfg.seed = seed;
        cfg.use_dvs = method.uses_dvs();
        let series = core::TimeSeries::from_values(values).map_err(err)?;
        let ws = core::make_windows(&series, window_len).map_err(err)?;
        let stack = method.build_network(window_len, seed).map_err(err)?;
        let report = py.detach(|| core::train(stack, &ws, &cfg)).map_err(err)?;
        Ok(Self {
            inner: report.model,
            loss_curve: report.loss_curve,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::TrainedModel::from_json(text).map_err(err)?,
            loss_curve: Vec::new(),
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn predict(&self, window: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_one(&window).map_err(err)
    }

    #[getter]
    fn loss_curve(&self) -> Vec<f64> {
        self.loss_curve.clone()
    }

    #[getter]
    fn input_len(&self) -> usize {
        self.inner.input_len()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.stack.param_count()
    }
}

#[pymodule]
fn dvs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(visibility_edges, m)?)?;
    m.add_function(wrap_pyfunction!(degrees, m)?)?;
    m.add_function(wrap_pyfunction!(enhanced_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(dvs_transform, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(synth_series, m)?)?;
    m.add_function(wrap_pyfunction!(make_windows, m)?)?;
    m.add_function(wrap_pyfunction!(sma_forecast, m)?)?;
    m.add_function(wrap_pyfunction!(ses_forecast, m)?)?;
    m.add_function(wrap_pyfunction!(vg_randomwalk_forecast, m)?)?;
    m.add_class::<PyModel>()?;
    Ok(())
}
