//! Python module `pyholonomic`.
//!
//! Matrices are nested lists of complex numbers, row-major. Summaries and
//! audit reports come back as plain dicts.

use holonomic::cli::{self, ExperimentConfig, RawConfig};
use holonomic::gates;
use holonomic::lambda_model;
use holonomic::propagate;
use holonomic::qmat::CMatrix;
use holonomic::schedule::{self, PlanConfig};
use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Rows = Vec<Vec<Complex64>>;

fn err(e: holonomic::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_rows(m: &CMatrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: Rows) -> PyResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn json_to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Holonomy parameters of a loop and the gate they realize.
#[pyclass(name = "GateSpec", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGateSpec(gates::GateSpec);

#[pymethods]
impl PyGateSpec {
    #[new]
    fn new(label: &str, theta0: f64, phi0: f64, gamma_plus: f64) -> PyResult<Self> {
        gates::GateSpec::from_parameters(label, theta0, phi0, gamma_plus).map(Self).map_err(err)
    }
    #[getter]
    fn label(&self) -> &str {
        &self.0.label
    }
    #[getter]
    fn theta0(&self) -> f64 {
        self.0.theta0
    }
    #[getter]
    fn phi0(&self) -> f64 {
        self.0.phi0
    }
    #[getter]
    fn gamma_plus(&self) -> f64 {
        self.0.gamma_plus
    }
    #[getter]
    fn qubits(&self) -> u8 {
        self.0.qubits
    }
    #[getter]
    fn global_phase(&self) -> f64 {
        self.0.global_phase
    }
    fn target(&self) -> Rows {
        to_rows(&self.0.target)
    }
    fn realized(&self) -> Rows {
        to_rows(&self.0.realized())
    }
    fn __repr__(&self) -> String {
        format!(
            "GateSpec({:?}, theta0={}, phi0={}, gamma_plus={})",
            self.0.label, self.0.theta0, self.0.phi0, self.0.gamma_plus
        )
    }
}

/// A piecewise control schedule.
#[pyclass(name = "Schedule", frozen, skip_from_py_object)]
struct PySchedule(schedule::Schedule);

#[pymethods]
impl PySchedule {
    /// Five-step loop with the single-qubit defaults.
    #[staticmethod]
    fn plan_single_qubit(theta0: f64, phi0: f64, gamma_plus: f64) -> PyResult<Self> {
        schedule::plan_single_qubit(theta0, phi0, gamma_plus, &PlanConfig::single_qubit_default())
            .map(Self)
            .map_err(err)
    }
    /// Two-qubit loop; `omega11` and `delta` in rad/s.
    #[staticmethod]
    fn plan_two_qubit(theta0: f64, phi0: f64, gamma_plus: f64, omega11: f64, delta: f64) -> PyResult<Self> {
        schedule::plan_two_qubit(theta0, phi0, gamma_plus, &PlanConfig::two_qubit_default(omega11, delta))
            .map(Self)
            .map_err(err)
    }
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        schedule::Schedule::from_text(text).map(Self).map_err(err)
    }
    fn to_text(&self) -> String {
        self.0.to_text()
    }
    #[getter]
    fn duration(&self) -> f64 {
        self.0.duration()
    }
    #[getter]
    fn total_area(&self) -> f64 {
        self.0.total_area()
    }
    fn __len__(&self) -> usize {
        self.0.segments().len()
    }
    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = schedule::audit(&self.0);
        let out = json_to_py(py, &report)?;
        out.set_item("clean", report.is_clean())?;
        Ok(out)
    }
    /// Propagates the three-level model and returns the 3×3 unitary.
    fn unitary(&self, step: f64) -> PyResult<Rows> {
        let d = self.0.duration();
        propagate::propagator_between(&self.0, &propagate::LambdaDrive, 0.0, d, step)
            .map(|u| to_rows(&u))
            .map_err(err)
    }
}

#[pyfunction]
fn table1(label: &str) -> PyResult<PyGateSpec> {
    gates::table1(label).map(PyGateSpec).map_err(err)
}

#[pyfunction]
fn decompose(target: Rows) -> PyResult<PyGateSpec> {
    gates::decompose(&from_rows(target)?).map(PyGateSpec).map_err(err)
}

#[pyfunction]
fn holonomy_gate(theta0: f64, phi0: f64, gamma_plus: f64) -> Rows {
    to_rows(&lambda_model::holonomy_gate(theta0, phi0, gamma_plus))
}

#[pyfunction]
fn phase_integral_max(x: f64) -> PyResult<f64> {
    holonomic::adiabatic::phase_integral_max(x).map_err(err)
}

/// `(error, leakage)` of `realized` against `target` on `subspace`.
#[pyfunction]
fn gate_error(realized: Rows, target: Rows, subspace: Vec<usize>) -> PyResult<(f64, f64)> {
    let e = propagate::gate_error(&from_rows(realized)?, &from_rows(target)?, &subspace).map_err(err)?;
    Ok((e.error, e.leakage))
}

#[pyfunction]
fn gatecheck<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let rows = cli::gatecheck_rows(&cli::table1_specs().map_err(err)?).map_err(err)?;
    json_to_py(py, &rows)
}

/// Runs one experiment from INI text; `overrides` are `section.key=value`.
#[pyfunction]
#[pyo3(signature = (config, overrides = Vec::new()))]
fn simulate<'py>(py: Python<'py>, config: &str, overrides: Vec<String>) -> PyResult<Bound<'py, PyDict>> {
    let mut raw = RawConfig::parse(config).map_err(err)?;
    for o in &overrides {
        raw.set(o).map_err(err)?;
    }
    let cfg = ExperimentConfig::from_raw(&raw).map_err(err)?;
    let art = py.detach(|| cli::execute(&cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("summary", json_to_py(py, &art.summary)?)?;
    out.set_item("trace_csv", art.trace_csv)?;
    out.set_item("schedule", art.schedule_text)?;
    out.set_item("table_csv", art.table_csv)?;
    Ok(out)
}

#[pymodule]
pub fn pyholonomic(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGateSpec>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(holonomy_gate, m)?)?;
    m.add_function(wrap_pyfunction!(phase_integral_max, m)?)?;
    m.add_function(wrap_pyfunction!(gate_error, m)?)?;
    m.add_function(wrap_pyfunction!(gatecheck, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
