//! Python bindings for the `eapm` library.
//!
//! Strategies cross the boundary as JSON strings in the same tagged format
//! the CLI reads and writes.

use eapm::cli::{random_strategy_file, reproduce_f2 as reproduce_f2_report, StrategyFile, StrategyKind};
use eapm::conversions::{dense_coding_lift as dense_lift, teleportation_lift as teleport_lift};
use eapm::games::{evaluate, f2_functional, fd_functional};
use eapm::linalg::paulis;
use eapm::polytope::{classical_membership, enumerate_vertices as enumerate, verify_facet};
use eapm::seesaw::{classical_maximum, seesaw_maximize, SeesawConfig};
use eapm::steering::{assemblage_from_state, lhs_search, pauli_measurement, steering_inequality_value, werner_state};
use eapm::{Behavior as CoreBehavior, Error, LinearFunctional, Scenario as CoreScenario};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::CapExceeded { .. } | Error::LpStall(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen, eq, skip_from_py_object, module = "eapm_py")]
#[derive(Clone, PartialEq)]
pub struct Scenario {
    inner: CoreScenario,
}

#[pymethods]
impl Scenario {
    #[new]
    fn new(d: usize, n_x: usize, n_y: usize, n_b: usize) -> PyResult<Self> {
        Ok(Self { inner: CoreScenario::new(d, n_x, n_y, n_b).map_err(to_py)? })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn n_x(&self) -> usize {
        self.inner.n_x
    }

    #[getter]
    fn n_y(&self) -> usize {
        self.inner.n_y
    }

    #[getter]
    fn n_b(&self) -> usize {
        self.inner.n_b
    }

    fn index(&self, b: usize, x: usize, y: usize) -> usize {
        self.inner.index(b, x, y)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Scenario({})", self.inner)
    }
}

/// Conditional distribution `p(b | x, y)`.
#[pyclass(skip_from_py_object, module = "eapm_py")]
#[derive(Clone)]
pub struct Behavior {
    inner: CoreBehavior,
}

#[pymethods]
impl Behavior {
    #[new]
    fn new(scenario: &Scenario, probs: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: CoreBehavior::new(scenario.inner, probs).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CoreBehavior::from_text(text).map_err(to_py)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn scenario(&self) -> Scenario {
        Scenario { inner: self.inner.scenario() }
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    fn get(&self, b: usize, x: usize, y: usize) -> f64 {
        self.inner.get(b, x, y)
    }

    /// Tests membership in the classical polytope; returns a dict with
    /// `feasible`, `residual` and, when infeasible, `hyperplane` and `gap`.
    fn classical_membership<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let m = classical_membership(&self.inner).map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("feasible", m.feasible)?;
        out.set_item("residual", m.residual)?;
        out.set_item("hyperplane", m.hyperplane.clone())?;
        out.set_item("gap", if m.feasible { 0.0 } else { m.separation_gap() })?;
        Ok(out)
    }
}

/// Linear functional on behaviors.
#[pyclass(skip_from_py_object, module = "eapm_py")]
#[derive(Clone)]
pub struct Functional {
    inner: LinearFunctional,
}

#[pymethods]
impl Functional {
    #[new]
    fn new(scenario: &Scenario, coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: LinearFunctional::new(scenario.inner, coeffs).map_err(to_py)? })
    }

    #[staticmethod]
    fn f2() -> Self {
        Self { inner: f2_functional() }
    }

    #[staticmethod]
    fn fd(d: usize) -> PyResult<Self> {
        Ok(Self { inner: fd_functional(d).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: LinearFunctional::from_inequality_text(text, None).map_err(to_py)?.0 })
    }

    #[getter]
    fn scenario(&self) -> Scenario {
        Scenario { inner: self.inner.scenario }
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    fn evaluate(&self, behavior: &Behavior) -> PyResult<f64> {
        evaluate(&self.inner, &behavior.inner).map_err(to_py)
    }

    /// Maximum over deterministic classical strategies.
    fn classical_max(&self) -> f64 {
        classical_maximum(&self.inner)
    }

    fn is_facet(&self, bound: f64) -> PyResult<bool> {
        let vs = enumerate(&self.inner.scenario).map_err(to_py)?;
        Ok(verify_facet(&vs, &self.inner, bound).map_err(to_py)?.is_facet)
    }

    /// See-saw over assisted classical strategies. Returns
    /// `(best_value, behavior, strategy_json)`.
    #[pyo3(signature = (assist_dim=2, restarts=50, seed=0))]
    fn seesaw(&self, py: Python<'_>, assist_dim: usize, restarts: usize, seed: u64) -> PyResult<(f64, Behavior, String)> {
        let cfg = SeesawConfig { assist_dim, restarts, seed, ..Default::default() };
        let f = self.inner.clone();
        let report = py.detach(|| seesaw_maximize(&f, &cfg)).map_err(to_py)?;
        let file =
            StrategyFile::EaClassical { scenario: f.scenario, assist_dim, strategy: report.best_strategy.clone() };
        let behavior = file.behavior().map_err(to_py)?;
        let text = serde_json::to_string(&file).map_err(json_err)?;
        Ok((report.best_value, Behavior { inner: behavior }, text))
    }
}

#[pyfunction]
fn enumerate_vertices(scenario: &Scenario) -> PyResult<Vec<Behavior>> {
    let vs = enumerate(&scenario.inner).map_err(to_py)?;
    Ok(vs.vertices.into_iter().map(|inner| Behavior { inner }).collect())
}

/// Random strategy JSON; `kind` is `"ea-classical"` or `"ea-quantum"`.
#[pyfunction]
#[pyo3(signature = (kind, scenario, assist_dim=2, seed=0))]
fn random_strategy(kind: &str, scenario: &Scenario, assist_dim: usize, seed: u64) -> PyResult<String> {
    let kind = match kind {
        "ea-classical" => StrategyKind::EaClassical,
        "ea-quantum" => StrategyKind::EaQuantum,
        other => return Err(PyValueError::new_err(format!("unknown strategy kind {other:?}"))),
    };
    serde_json::to_string(&random_strategy_file(kind, scenario.inner, assist_dim, seed)).map_err(json_err)
}

/// Behavior generated by a strategy JSON document.
#[pyfunction]
fn strategy_behavior(strategy_json: &str) -> PyResult<Behavior> {
    let file: StrategyFile = serde_json::from_str(strategy_json).map_err(json_err)?;
    Ok(Behavior { inner: file.behavior().map_err(to_py)? })
}

/// Dense-coding lift of an `ea-classical` strategy with `d²` symbols.
#[pyfunction]
fn dense_coding_lift(strategy_json: &str) -> PyResult<String> {
    let StrategyFile::EaClassical { scenario, assist_dim, strategy } =
        serde_json::from_str(strategy_json).map_err(json_err)?
    else {
        return Err(PyValueError::new_err("expected an ea-classical strategy"));
    };
    let (ls, lifted) = dense_lift(&scenario, assist_dim, &strategy).map_err(to_py)?;
    let out = StrategyFile::EaQuantum { scenario: ls, assist_dim: assist_dim * ls.d, strategy: lifted };
    serde_json::to_string(&out).map_err(json_err)
}

/// Teleportation lift of an `ea-quantum` strategy.
#[pyfunction]
fn teleportation_lift(strategy_json: &str) -> PyResult<String> {
    let StrategyFile::EaQuantum { scenario, assist_dim, strategy } =
        serde_json::from_str(strategy_json).map_err(json_err)?
    else {
        return Err(PyValueError::new_err("expected an ea-quantum strategy"));
    };
    let (ls, lifted) = teleport_lift(&scenario, assist_dim, &strategy).map_err(to_py)?;
    let out = StrategyFile::EaClassical { scenario: ls, assist_dim: assist_dim * scenario.d, strategy: lifted };
    serde_json::to_string(&out).map_err(json_err)
}

/// LHS search and steering value for a two-qubit Werner state measured
/// with σz and σx. Returns `(lhs_found, residual, inequality_value)`.
#[pyfunction]
fn werner_steering(py: Python<'_>, v: f64) -> PyResult<(bool, f64, f64)> {
    py.detach(|| {
        let [x, _, z] = paulis();
        let povms = vec![pauli_measurement(&z)?, pauli_measurement(&x)?];
        let asm = assemblage_from_state(&werner_state(v)?, &povms)?;
        let search = lhs_search(&asm, &Default::default())?;
        Ok((search.found(), search.residual, steering_inequality_value(&asm)?))
    })
    .map_err(to_py)
}

/// Full F_2 report as a JSON string.
#[pyfunction]
#[pyo3(signature = (restarts=50, seed=0))]
fn reproduce_f2(py: Python<'_>, restarts: usize, seed: u64) -> PyResult<String> {
    let cfg = SeesawConfig { restarts, seed, ..Default::default() };
    let report = py.detach(|| reproduce_f2_report(&cfg)).map_err(to_py)?;
    serde_json::to_string(&report).map_err(json_err)
}

#[pymodule]
fn eapm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Behavior>()?;
    m.add_class::<Functional>()?;
    m.add_function(wrap_pyfunction!(enumerate_vertices, m)?)?;
    m.add_function(wrap_pyfunction!(random_strategy, m)?)?;
    m.add_function(wrap_pyfunction!(strategy_behavior, m)?)?;
    m.add_function(wrap_pyfunction!(dense_coding_lift, m)?)?;
    m.add_function(wrap_pyfunction!(teleportation_lift, m)?)?;
    m.add_function(wrap_pyfunction!(werner_steering, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_f2, m)?)?;
    Ok(())
}
