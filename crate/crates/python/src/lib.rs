//! Python module `sic_py`. Scalars come back as floats, tables as nested
//! lists, and structured reports as JSON strings for `json.loads`.

pub mod api;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use crate::api::ErrorKind;

fn to_py(e: sic_core::Error) -> PyErr {
    match api::classify(&e) {
        ErrorKind::Value => PyValueError::new_err(e.to_string()),
        ErrorKind::Runtime => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyfunction]
fn version() -> &'static str {
    sic_core::VERSION
}

/// SIC measurement depolarised to `visibility`, as JSON.
#[pyfunction]
#[pyo3(signature = (visibility = 1.0))]
fn sic_povm_json(visibility: f64) -> PyResult<String> {
    api::sic_povm_json(visibility).map_err(to_py)
}

#[pyfunction]
fn povm_fidelity_to_sic(povm_json: &str) -> PyResult<f64> {
    api::povm_fidelity_to_sic(povm_json).map_err(to_py)
}

/// Largest visibility at which the measurement (default: SIC) is simulable
/// with `n`-outcome measurements.
#[pyfunction]
#[pyo3(signature = (n, povm_json = None, tol = 1e-8))]
fn critical_visibility(py: Python<'_>, n: usize, povm_json: Option<String>, tol: f64) -> PyResult<f64> {
    py.detach(|| api::critical_visibility(n, povm_json.as_deref(), tol))
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, tol = 1e-8))]
fn discrimination_bound(py: Python<'_>, n: usize, tol: f64) -> PyResult<f64> {
    py.detach(|| api::discrimination_bound(n, tol)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (n, eps = None, restarts = 50, seed = 0))]
fn discrimination_bound_distrust(
    py: Python<'_>,
    n: usize,
    eps: Option<Vec<f64>>,
    restarts: usize,
    seed: u64,
) -> PyResult<f64> {
    py.detach(|| api::discrimination_bound_distrust(n, eps, restarts, seed))
        .map_err(to_py)
}

/// `(guessing probability, bits)`.
#[pyfunction]
#[pyo3(signature = (visibility, x_star = 1))]
fn randomness(py: Python<'_>, visibility: f64, x_star: usize) -> PyResult<(f64, f64)> {
    py.detach(|| api::randomness(visibility, x_star)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (grid, x_star = 1))]
fn randomness_curve(py: Python<'_>, grid: Vec<f64>, x_star: usize) -> PyResult<Vec<(f64, f64)>> {
    py.detach(|| api::randomness_curve(&grid, x_star)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (visibility = 1.0))]
fn probe_table(visibility: f64) -> PyResult<Vec<Vec<f64>>> {
    api::probe_table(visibility).map_err(to_py)
}

#[pyfunction]
fn sample_table(probs: Vec<Vec<f64>>, n_total: u64, seed: u64) -> PyResult<Vec<Vec<u64>>> {
    api::sample_table(&probs, n_total, seed).map_err(to_py)
}

/// `(povm_json, fidelity_to_sic)` from SIC-probe counts.
#[pyfunction]
fn mle_detector(py: Python<'_>, counts: Vec<Vec<u64>>) -> PyResult<(String, f64)> {
    py.detach(|| api::mle_detector(counts)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (game, counts = 0, noise = 1.0, seed = 0, n = 3))]
fn play_game(py: Python<'_>, game: &str, counts: u64, noise: f64, seed: u64, n: usize) -> PyResult<String> {
    let game = game.to_string();
    py.detach(|| api::play_game(&game, counts, noise, seed, n)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (game, counts, seed = 0))]
fn game_from_counts(game: &str, counts: Vec<Vec<u64>>, seed: u64) -> PyResult<String> {
    api::game_from_counts(game, counts, seed).map_err(to_py)
}

#[pyfunction]
fn quantum_matching_value(n: usize) -> PyResult<f64> {
    sic_core::protocols::quantum_matching_value(n).map_err(to_py)
}

#[pyfunction]
fn classical_matching_bound(n: usize) -> PyResult<f64> {
    sic_core::protocols::classical_matching_bound(n)
        .map(|b| b.value)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (visibility = 1.0, shots = 1_000_000, seed = 0, n_values = vec![3]))]
fn pipeline(py: Python<'_>, visibility: f64, shots: u64, seed: u64, n_values: Vec<usize>) -> PyResult<String> {
    py.detach(|| api::pipeline(visibility, shots, seed, n_values)).map_err(to_py)
}

#[pymodule]
fn sic_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", sic_core::VERSION)?;
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(sic_povm_json, m)?)?;
    m.add_function(wrap_pyfunction!(povm_fidelity_to_sic, m)?)?;
    m.add_function(wrap_pyfunction!(critical_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(discrimination_bound, m)?)?;
    m.add_function(wrap_pyfunction!(discrimination_bound_distrust, m)?)?;
    m.add_function(wrap_pyfunction!(randomness, m)?)?;
    m.add_function(wrap_pyfunction!(randomness_curve, m)?)?;
    m.add_function(wrap_pyfunction!(probe_table, m)?)?;
    m.add_function(wrap_pyfunction!(sample_table, m)?)?;
    m.add_function(wrap_pyfunction!(mle_detector, m)?)?;
    m.add_function(wrap_pyfunction!(play_game, m)?)?;
    m.add_function(wrap_pyfunction!(game_from_counts, m)?)?;
    m.add_function(wrap_pyfunction!(quantum_matching_value, m)?)?;
    m.add_function(wrap_pyfunction!(classical_matching_bound, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline, m)?)?;
    Ok(())
}
