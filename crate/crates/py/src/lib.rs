//! Python bindings. Reports come back as plain dicts with the same field names
//! as the CLI's JSON output.

use ::hubforge as core;
use core::cmj::{killed_size as core_killed_size, Caps};
use core::criteria::{self, ClassifyOptions};
use core::hubs::{self, SupermartingaleOptions, DEFAULT_RACE_HORIZON};
use core::replicate::replicate_rng;
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

fn to_py_err(e: core::Error) -> PyErr {
    use core::Error as E;
    match e {
        e if e.is_numeric_precondition() => PyArithmeticError::new_err(e.to_string()),
        e @ (E::Parse { .. } | E::InvalidArgument(_) | E::UnsupportedSpec(_) | E::InvalidWeight(_) | E::NonPositiveWeight { .. }) => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Round-trips a report through JSON into Python objects.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Attachment rule `f`, parsed from the `kind:key=value,...` text form.
#[pyclass(name = "AttachmentSpec", module = "hubforge", frozen)]
struct PySpec {
    inner: core::AttachmentSpec,
}

#[pymethods]
impl PySpec {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: text.parse().map_err(to_py_err)? })
    }

    #[staticmethod]
    fn constant(c: f64) -> PyResult<Self> {
        Ok(Self { inner: core::AttachmentSpec::constant(c).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn linear(a: f64, b: f64) -> PyResult<Self> {
        Ok(Self { inner: core::AttachmentSpec::linear(a, b).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn power(p: f64, c: f64) -> PyResult<Self> {
        Ok(Self { inner: core::AttachmentSpec::power(p, c).map_err(to_py_err)? })
    }

    #[staticmethod]
    fn parity_square() -> Self {
        Self { inner: core::AttachmentSpec::parity_square() }
    }

    /// `f(k)`; fails for random rules.
    fn weight(&self, k: u64) -> PyResult<f64> {
        self.inner.weight(k).map_err(to_py_err)
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("AttachmentSpec('{}')", self.inner)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Grows a tree with `steps` attachments. Returns `parents` (of nodes 1..),
/// `out_degrees` and the leader `trace`.
#[pyfunction]
#[pyo3(signature = (spec, steps, seed = 0, checkpoints = Vec::new()))]
fn grow(py: Python<'_>, spec: &PySpec, steps: usize, seed: u64, checkpoints: Vec<usize>) -> PyResult<Py<PyAny>> {
    let mut rng = replicate_rng(seed, 0);
    let (tree, trace) = hubs::track(&spec.inner, steps + 1, checkpoints, &mut rng).map_err(to_py_err)?;
    let parents: Vec<usize> = (1..tree.len()).filter_map(|i| tree.parent(i)).collect();
    let report = serde_json::json!({
        "nodes": tree.len(),
        "parents": parents,
        "out_degrees": tree.out_degrees(),
        "trace": trace,
    });
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (spec, truncation = criteria::DEFAULT_TRUNCATION, kappa_horizon = 10_000))]
fn classify(py: Python<'_>, spec: &PySpec, truncation: u64, kappa_horizon: u64) -> PyResult<Py<PyAny>> {
    let opts = ClassifyOptions { truncation, kappa_horizon, ..Default::default() };
    to_py(py, &criteria::classify(&spec.inner, &opts))
}

/// `sum_n prod_{i<n} f(i) / (lambda + f(i))` with a certified tail bound.
#[pyfunction]
#[pyo3(signature = (spec, lam, truncation = criteria::DEFAULT_TRUNCATION))]
fn malthus_sum(py: Python<'_>, spec: &PySpec, lam: f64, truncation: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &criteria::malthus_sum(&spec.inner, lam, truncation).map_err(to_py_err)?)
}

#[pyfunction]
#[pyo3(signature = (spec, alpha, replicates = 10_000, seed = 0))]
fn killed_size(py: Python<'_>, spec: &PySpec, alpha: f64, replicates: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let r = core_killed_size(&spec.inner, alpha, replicates, seed, Caps::default()).map_err(to_py_err)?;
    to_py(py, &r)
}

/// Leader stabilization curve; `rows` has one entry per replicate and checkpoint.
#[pyfunction]
#[pyo3(signature = (spec, checkpoints, n_max, replicates = 100, seed = 0))]
fn persistence(
    py: Python<'_>,
    spec: &PySpec,
    checkpoints: Vec<usize>,
    n_max: usize,
    replicates: usize,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let t = hubs::persistence_experiment(&spec.inner, &checkpoints, n_max, replicates, seed).map_err(to_py_err)?;
    to_py(py, &t)
}

#[pyfunction]
#[pyo3(signature = (spec, k, lam, y = 0.0, replicates = 10_000, horizon = DEFAULT_RACE_HORIZON, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn overtake(
    py: Python<'_>,
    spec: &PySpec,
    k: u64,
    lam: f64,
    y: f64,
    replicates: usize,
    horizon: u64,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let r = hubs::overtake_probability(&spec.inner, k, lam, y, replicates, horizon, seed).map_err(to_py_err)?;
    to_py(py, &r)
}

#[pyfunction]
#[pyo3(signature = (spec, j = 1, max_horizon = 10_000, replicates = 1000, seed = 0))]
fn phi(py: Python<'_>, spec: &PySpec, j: u64, max_horizon: u64, replicates: usize, seed: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &hubs::estimate_phi(&spec.inner, j, max_horizon, replicates, seed).map_err(to_py_err)?)
}

#[pyfunction]
#[pyo3(signature = (spec, snapshots = 100, max_nodes = 10_000, seed = 0))]
fn supermartingale(py: Python<'_>, spec: &PySpec, snapshots: usize, max_nodes: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let opts = SupermartingaleOptions { snapshots, max_nodes, ..Default::default() };
    to_py(py, &hubs::supermartingale_check(&spec.inner, &opts, seed).map_err(to_py_err)?)
}

#[pymodule]
#[pyo3(name = "hubforge")]
fn hubforge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpec>()?;
    m.add_function(wrap_pyfunction!(grow, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(malthus_sum, m)?)?;
    m.add_function(wrap_pyfunction!(killed_size, m)?)?;
    m.add_function(wrap_pyfunction!(persistence, m)?)?;
    m.add_function(wrap_pyfunction!(overtake, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(supermartingale, m)?)?;
    Ok(())
}
