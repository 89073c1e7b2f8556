//! Python module `pyvqoco`: run experiment configs and call the queue
//! updates and schedules from Python.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vqoco::algorithms;
use vqoco::experiment::{self, RunOptions, TupleResult};

fn value_error(e: vqoco::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parses and checks a TOML config. Raises `ValueError` listing every
/// issue with its line.
#[pyfunction]
fn validate_config(text: &str) -> PyResult<()> {
    let cfg = experiment::parse_config(text).map_err(value_error)?;
    experiment::validate_runs(&cfg).map_err(value_error)
}

fn result_dict<'py>(py: Python<'py>, r: &TupleResult) -> PyResult<Bound<'py, PyDict>> {
    let row = experiment::summary_row(r);
    let d = PyDict::new(py);
    d.set_item("algorithm", &row.algorithm)?;
    d.set_item("horizon", row.horizon)?;
    d.set_item("seed", row.seed)?;
    d.set_item("tuple_seed", row.tuple_seed)?;
    d.set_item("ok", row.ok)?;
    d.set_item("message", &row.message)?;
    d.set_item("regret", row.regret)?;
    d.set_item("regret_avg", row.regret_avg)?;
    d.set_item("vio_final", row.vio_final.clone())?;
    d.set_item("regret_exponent", row.regret_exponent)?;
    d.set_item("vio_exponent", row.vio_exponent)?;
    d.set_item("path_length", row.path_length)?;
    d.set_item("variation", row.variation)?;
    d.set_item("max_lambda_norm", row.max_lambda_norm)?;
    if let Ok(run) = &r.outcome {
        let recs = &run.trajectory.records;
        let traj = PyDict::new(py);
        traj.set_item("t", recs.iter().map(|x| x.t).collect::<Vec<_>>())?;
        traj.set_item("loss", recs.iter().map(|x| x.loss).collect::<Vec<_>>())?;
        traj.set_item("regret_cum", run.report.regret_cum.clone())?;
        traj.set_item("vio_cum", run.report.vio_cum.clone())?;
        traj.set_item("lambda_norm", recs.iter().map(|x| x.lambda_norm).collect::<Vec<_>>())?;
        traj.set_item("alpha", recs.iter().map(|x| x.alpha).collect::<Vec<_>>())?;
        traj.set_item("gamma", recs.iter().map(|x| x.gamma).collect::<Vec<_>>())?;
        traj.set_item("residual", recs.iter().map(|x| x.residual).collect::<Vec<_>>())?;
        d.set_item("trajectory", traj)?;
        d.set_item("notes", run.notes.clone())?;
    }
    Ok(d)
}

/// Runs every (algorithm, horizon, seed) tuple of a config and returns one
/// dict per tuple, in the same order as `summary.csv`. Failed tuples have
/// `ok = False` and a `message`; they do not raise.
#[pyfunction]
#[pyo3(signature = (text, jobs=None, filter=None))]
fn run_config<'py>(
    py: Python<'py>,
    text: &str,
    jobs: Option<usize>,
    filter: Option<String>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    if jobs == Some(0) {
        return Err(PyValueError::new_err("jobs must be at least 1"));
    }
    let cfg = experiment::parse_config(text).map_err(value_error)?;
    experiment::validate_runs(&cfg).map_err(value_error)?;
    let opts = RunOptions { filter, jobs };
    let results = py
        .detach(|| experiment::run_experiment(&cfg, &opts))
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    results.iter().map(|r| result_dict(py, r)).collect()
}

/// `max(λ + γg, −γg)` componentwise.
#[pyfunction]
fn vqb_dual_update(lam: Vec<f64>, gamma: f64, g: Vec<f64>) -> PyResult<Vec<f64>> {
    if lam.len() != g.len() {
        return Err(PyValueError::new_err("lam and g must have the same length"));
    }
    Ok(algorithms::vqb_dual_update(&lam, gamma, &g))
}

/// `(α, γ)` of the constant-parameter learner for exponent `a`.
#[pyfunction]
fn slater_params(a: f64, horizon: usize, beta: f64) -> PyResult<(f64, f64)> {
    algorithms::slater_params(a, horizon, beta).map_err(value_error)
}

/// Epoch lengths of the doubling wrapper over `horizon` rounds.
#[pyfunction]
fn epoch_schedule(horizon: usize) -> Vec<usize> {
    algorithms::epoch_schedule(horizon)
}

#[pymodule]
fn pyvqoco(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("ALGORITHMS", experiment::ALGORITHM_NAMES.to_vec())?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(vqb_dual_update, m)?)?;
    m.add_function(wrap_pyfunction!(slater_params, m)?)?;
    m.add_function(wrap_pyfunction!(epoch_schedule, m)?)?;
    Ok(())
}
