//! Plain Rust entry points behind the Python functions, testable without an
//! interpreter. Structured results are returned as JSON text.

use sic_core::certify::{self, DistrustVector, SeesawOptions};
use sic_core::povm::{self, Povm};
use sic_core::protocols::{self, PipelineConfig};
use sic_core::sdp::SolverOptions;
use sic_core::tomo::{self, CountTable, MleOptions, ProbeSet};
use sic_core::{Error, Result};

/// How a core error surfaces in Python.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments or data: `ValueError`.
    Value,
    /// The numerics failed: `RuntimeError`.
    Runtime,
}

pub fn classify(e: &Error) -> ErrorKind {
    match e {
        Error::Solver { .. } | Error::NoConvergence(_) | Error::Io(_) => ErrorKind::Runtime,
        _ => ErrorKind::Value,
    }
}

fn json<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string(v)?)
}

fn povm_or_sic(povm_json: Option<&str>) -> Result<Povm> {
    match povm_json {
        Some(s) => Ok(serde_json::from_str(s)?),
        None => Ok(povm::sic_povm()),
    }
}

pub fn sic_povm_json(visibility: f64) -> Result<String> {
    json(&povm::depolarize(&povm::sic_povm(), visibility)?)
}

pub fn povm_fidelity_to_sic(povm_json: &str) -> Result<f64> {
    povm::povm_fidelity(&povm_or_sic(Some(povm_json))?, &povm::sic_povm())
}

pub fn critical_visibility(n: usize, povm_json: Option<&str>, tol: f64) -> Result<f64> {
    let p = povm_or_sic(povm_json)?;
    certify::critical_visibility_report(&p, n, &SolverOptions::with_tol(tol)).map(|r| r.value)
}

pub fn discrimination_bound(n: usize, tol: f64) -> Result<f64> {
    certify::discrimination_report(&povm::sic_states(), n, &SolverOptions::with_tol(tol)).map(|r| r.value)
}

pub fn discrimination_bound_distrust(n: usize, eps: Option<Vec<f64>>, restarts: usize, seed: u64) -> Result<f64> {
    let eps = match eps {
        Some(e) => DistrustVector::new(e)?,
        None => DistrustVector::measured(),
    };
    let s = SeesawOptions {
        restarts,
        seed,
        ..SeesawOptions::default()
    };
    certify::discrimination_distrust_report(&povm::sic_states(), &eps, n, &s, &SolverOptions::default()).map(|r| r.value)
}

/// `(guessing probability, bits)` for the depolarised SIC measurement.
pub fn randomness(visibility: f64, x_star: usize) -> Result<(f64, f64)> {
    let table = certify::depolarized_exclusion_table(visibility)?;
    certify::mdi_guessing_probability(&povm::exclusion_states(), &table, x_star, None)
}

pub fn randomness_curve(grid: &[f64], x_star: usize) -> Result<Vec<(f64, f64)>> {
    certify::randomness_vs_visibility_curve(grid, x_star)
}

/// `p(a|x)` of the SIC interferometer at uniform visibility, probed with the SIC states.
pub fn probe_table(visibility: f64) -> Result<Vec<Vec<f64>>> {
    let device = protocols::sic_device(visibility)?;
    Ok(ProbeSet::sic().states().iter().map(|s| device.probabilities(s)).collect())
}

pub fn sample_table(probs: &[Vec<f64>], n_total: u64, seed: u64) -> Result<Vec<Vec<u64>>> {
    protocols::sample_table(probs, n_total, seed)
}

/// Reconstructed detector as JSON and its fidelity to the SIC measurement.
pub fn mle_detector(counts: Vec<Vec<u64>>) -> Result<(String, f64)> {
    let table = CountTable::new(counts)?;
    let est = tomo::mle_detector(&table.frequencies()?, &ProbeSet::sic(), &MleOptions::default())?;
    let f = povm::povm_fidelity(&est.povm, &povm::sic_povm())?;
    Ok((json(&est.povm)?, f))
}

pub fn play_game(game: &str, counts: u64, noise: f64, seed: u64, n: usize) -> Result<String> {
    let r = match game {
        "discrimination" => protocols::run_discrimination(&protocols::sic_device(noise)?, counts, seed)?,
        "mub" => protocols::mub_game_score(&protocols::mub_devices(noise)?, counts, seed)?,
        "matching" => protocols::matching_depolarized(n, noise, counts, seed)?,
        "exclusion" => return json(&protocols::run_exclusion(&protocols::sic_device(noise)?, counts, seed)?),
        other => return Err(unknown_game(other)),
    };
    json(&r)
}

pub fn game_from_counts(game: &str, counts: Vec<Vec<u64>>, seed: u64) -> Result<String> {
    let r = match game {
        "discrimination" => protocols::discrimination_from_counts(counts, seed)?,
        "mub" => protocols::mub_from_counts(counts, seed)?,
        "matching" => protocols::matching_from_counts(counts, seed)?,
        other => return Err(unknown_game(other)),
    };
    json(&r)
}

fn unknown_game(name: &str) -> Error {
    Error::InvalidArgument(format!("unknown game `{name}`"))
}

pub fn pipeline(visibility: f64, shots: u64, seed: u64, n_values: Vec<usize>) -> Result<String> {
    json(&protocols::noisy_pipeline(&PipelineConfig {
        visibility,
        counts_per_probe: shots,
        seed,
        n_values,
    })?)
}
