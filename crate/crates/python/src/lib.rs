//! Python bindings for the trapped-ion trapping-state simulator.
//!
//! Exposes the special functions, trapping-condition solvers, rate builders,
//! and the config-driven experiment runner:
//!
//! ```python
//! import sideband_py as sb
//!
//! sb.coupling_f(50, 0.1)             # Franck-Condon coupling factor
//! sb.eta_zeros_for_n(50, 1)          # [0.26827...]
//! exp = sb.Experiment("regime = incoherent\neta = 0.268\ng = 10\n...")
//! result = exp.evolve()              # {"snapshots": ..., "moments": ...}
//! ```

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use sideband::config::ExperimentConfig;
use sideband::engine::{self, MomentRecord, NumberDistribution};
use sideband::error::Error;
use sideband::montecarlo::tv_distance;
use sideband::rates::{self, TransitionRates};
use sideband::specfun;
use sideband::trapping;

fn to_py_err(err: Error) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// Generalized Laguerre polynomial L_n^(alpha)(x).
#[pyfunction]
fn laguerre(n: usize, alpha: u32, x: f64) -> PyResult<f64> {
    specfun::laguerre(n, alpha, x).map_err(to_py_err)
}

/// Nonlinear sideband coupling factor f(n; eta).
#[pyfunction]
fn coupling_f(n: usize, eta: f64) -> f64 {
    specfun::coupling_f(n, eta)
}

/// Coupling values f(0; eta) .. f(n_max; eta).
#[pyfunction]
fn tabulate_coupling(eta: f64, n_max: usize) -> Vec<f64> {
    specfun::tabulate_coupling(eta, n_max).values().to_vec()
}

/// Fock transition probability |<m|exp(i beta (a+ + a))|n>|^2.
#[pyfunction]
fn displacement_prob(m: usize, n: usize, beta: f64) -> f64 {
    specfun::displacement_prob(m, n, beta)
}

/// Pulse area that makes n0 a micro-maser-type trapping state.
#[pyfunction]
#[pyo3(signature = (n0, eta, m = 1))]
fn pulse_area_for_state(n0: usize, eta: f64, m: u32) -> PyResult<f64> {
    trapping::pulse_area_for_state(n0, eta, m).map_err(to_py_err)
}

/// The `count` smallest Lamb-Dicke parameters with f(n0; eta) = 0.
#[pyfunction]
#[pyo3(signature = (n0, count = 1))]
fn eta_zeros_for_n(n0: usize, count: usize) -> PyResult<Vec<f64>> {
    trapping::eta_zeros_for_n(n0, count).map_err(to_py_err)
}

/// Discrete trapping numbers for a fixed Lamb-Dicke parameter.
#[pyfunction]
fn trapping_numbers_for_eta(eta: f64, n_max: usize) -> Vec<usize> {
    trapping::trapping_numbers_for_eta(eta, n_max)
}

/// (n0, eta, root_index) table of coupling-zero trapping conditions.
#[pyfunction]
#[pyo3(signature = (n0_max, eta_ceiling = 1.0))]
fn fig5_dataset(n0_max: usize, eta_ceiling: f64) -> Vec<(usize, f64, usize)> {
    trapping::fig5_dataset(n0_max, eta_ceiling)
        .into_iter()
        .map(|e| (e.n0, e.eta, e.root_index))
        .collect()
}

fn rates_to_tuple(rates: &TransitionRates) -> (Vec<f64>, Vec<f64>) {
    (rates.up().to_vec(), rates.stay().to_vec())
}

/// Coherent per-cycle rates (up, stay) for a pulse area.
#[pyfunction]
fn coherent_rates(eta: f64, pulse_area: f64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let profile = specfun::tabulate_coupling(eta, n_max);
    rates_to_tuple(&rates::coherent_rates(&profile, pulse_area))
}

/// Incoherent per-cycle rates (up, stay) for a saturation-time product G.
#[pyfunction]
fn incoherent_rates(eta: f64, saturation: f64, n_max: usize) -> (Vec<f64>, Vec<f64>) {
    let profile = specfun::tabulate_coupling(eta, n_max);
    rates_to_tuple(&rates::incoherent_rates(&profile, saturation))
}

/// Dimensionless incoherent damping exponent gamma_n tau_s.
#[pyfunction]
fn damping_exponent(n: usize, eta: f64, saturation: f64) -> f64 {
    rates::damping_exponent(n, eta, saturation)
}

/// Closed-form result of k idealized half/half cycles applied to `probs`.
#[pyfunction]
fn binomial_closed_form(probs: Vec<f64>, k: usize) -> PyResult<Vec<f64>> {
    let dist = NumberDistribution::from_probs(probs).map_err(to_py_err)?;
    Ok(engine::binomial_closed_form(&dist, k).probs().to_vec())
}

/// (mean, variance, relvar-or-None) of a number distribution.
#[pyfunction]
fn distribution_moments(probs: Vec<f64>) -> PyResult<(f64, f64, Option<f64>)> {
    let dist = NumberDistribution::from_probs(probs).map_err(to_py_err)?;
    let m = engine::moments(&dist).map_err(to_py_err)?;
    Ok((m.mean, m.variance, m.relvar))
}

fn snapshots_to_py<'py>(
    py: Python<'py>,
    snapshots: &[(usize, NumberDistribution)],
) -> PyResult<Bound<'py, PyList>> {
    let list = PyList::empty(py);
    for (cycle, dist) in snapshots {
        let entry = PyDict::new(py);
        entry.set_item("cycle", cycle)?;
        entry.set_item("probs", dist.probs().to_vec())?;
        entry.set_item("leak", dist.leak())?;
        list.append(entry)?;
    }
    Ok(list)
}

fn moments_to_py<'py>(py: Python<'py>, series: &[MomentRecord]) -> PyResult<Bound<'py, PyList>> {
    let list = PyList::empty(py);
    for r in series {
        let entry = PyDict::new(py);
        entry.set_item("cycle", r.cycle)?;
        entry.set_item("mean", r.mean)?;
        entry.set_item("variance", r.variance)?;
        entry.set_item("relvar", r.relvar)?;
        entry.set_item("argmax", r.argmax)?;
        entry.set_item("pmax", r.pmax)?;
        entry.set_item("leak", r.leak)?;
        list.append(entry)?;
    }
    Ok(list)
}

/// A configured experiment, built from the flat `key = value` config text.
#[pyclass]
struct Experiment {
    config: ExperimentConfig,
}

#[pymethods]
impl Experiment {
    #[new]
    fn new(config_text: &str) -> PyResult<Self> {
        Ok(Self {
            config: ExperimentConfig::parse(config_text).map_err(to_py_err)?,
        })
    }

    /// Per-cycle transition rates as {"up": [...], "stay": [...]}.
    fn rates<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rates = self.config.transition_rates();
        let out = PyDict::new(py);
        out.set_item("up", rates.up().to_vec())?;
        out.set_item("stay", rates.stay().to_vec())?;
        Ok(out)
    }

    /// Deterministic evolution; returns {"snapshots": [...], "moments": [...]}.
    fn evolve<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let (snapshots, series) = self.config.run_evolution().map_err(to_py_err)?;
        let out = PyDict::new(py);
        out.set_item("snapshots", snapshots_to_py(py, &snapshots)?)?;
        out.set_item("moments", moments_to_py(py, &series)?)?;
        Ok(out)
    }

    /// Monte Carlo ensemble; returns snapshots, moments, the run report, and
    /// the total-variation distance to the deterministic engine per
    /// checkpoint.
    fn trajectories<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let ensemble = self.config.run_trajectories().map_err(to_py_err)?;
        let (engine_snapshots, _) = self.config.run_evolution().map_err(to_py_err)?;
        let comparison = PyList::empty(py);
        for ((cycle, empirical), (_, engine_dist)) in
            ensemble.checkpoints.iter().zip(&engine_snapshots)
        {
            let entry = PyDict::new(py);
            entry.set_item("cycle", cycle)?;
            entry.set_item(
                "tv_distance",
                tv_distance(empirical, engine_dist).map_err(to_py_err)?,
            )?;
            comparison.append(entry)?;
        }
        let report = PyDict::new(py);
        report.set_item("n_trajectories", ensemble.report.n_trajectories)?;
        report.set_item("cycles", ensemble.report.cycles)?;
        report.set_item("truncation_hits", ensemble.report.truncation_hits)?;
        report.set_item("scatter_cap_hits", ensemble.report.scatter_cap_hits)?;

        let out = PyDict::new(py);
        out.set_item("snapshots", snapshots_to_py(py, &ensemble.checkpoints)?)?;
        out.set_item("moments", moments_to_py(py, &ensemble.moments)?)?;
        out.set_item("report", report)?;
        out.set_item("comparison", comparison)?;
        Ok(out)
    }
}

#[pymodule]
fn sideband_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(laguerre, m)?)?;
    m.add_function(wrap_pyfunction!(coupling_f, m)?)?;
    m.add_function(wrap_pyfunction!(tabulate_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(displacement_prob, m)?)?;
    m.add_function(wrap_pyfunction!(pulse_area_for_state, m)?)?;
    m.add_function(wrap_pyfunction!(eta_zeros_for_n, m)?)?;
    m.add_function(wrap_pyfunction!(trapping_numbers_for_eta, m)?)?;
    m.add_function(wrap_pyfunction!(fig5_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(coherent_rates, m)?)?;
    m.add_function(wrap_pyfunction!(incoherent_rates, m)?)?;
    m.add_function(wrap_pyfunction!(damping_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(binomial_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(distribution_moments, m)?)?;
    m.add_class::<Experiment>()?;
    Ok(())
}
