//! Python bindings: boxes, classification, plain-float geometry, the verified
//! sine, and certificate runs and verification.

use std::path::PathBuf;

use propeller_core::constraints::{self, SearchBox};
use propeller_core::geometry::{self, EdgeTriple};
use propeller_core::rigor::{self, ErrValue};
use propeller_core::traversal::{self, Domain, RunConfig, TraversalError};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: TraversalError) -> PyErr {
    match e {
        TraversalError::Config(_) | TraversalError::Parse { .. } => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A net box `j a1 a2 a3`.
#[pyclass(name = "SearchBox", frozen, eq, hash, ord, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct PySearchBox(SearchBox);

#[pymethods]
impl PySearchBox {
    #[new]
    fn new(depth: u32, numerators: [i64; 3]) -> PyResult<Self> {
        SearchBox::new(depth, numerators).map(PySearchBox).map_err(value_err)
    }

    #[getter]
    fn depth(&self) -> u32 {
        self.0.depth()
    }

    #[getter]
    fn numerators(&self) -> [i64; 3] {
        self.0.numerators()
    }

    #[getter]
    fn center(&self) -> [f64; 3] {
        self.0.center_values()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.0.radius()
    }

    fn children(&self) -> Vec<PySearchBox> {
        self.0.children().into_iter().map(PySearchBox).collect()
    }

    /// `(case, detail)`, with case one of `I`, `II`, `III`, `IV`, `UNRESOLVED`.
    fn classify(&self) -> (String, u32) {
        let o = constraints::classify(&self.0);
        (o.case.as_str().to_string(), o.detail)
    }

    fn __repr__(&self) -> String {
        format!("SearchBox('{}')", self.0)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

/// A value with a rounding budget in units of `3·2⁻⁵²`.
#[pyclass(name = "ErrValue", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyErrValue(ErrValue);

#[pymethods]
impl PyErrValue {
    #[new]
    #[pyo3(signature = (value, mult=0, abs=0))]
    fn new(value: f64, mult: u32, abs: u32) -> PyResult<Self> {
        ErrValue::new(value, mult, abs).map(PyErrValue).map_err(value_err)
    }

    #[getter]
    fn value(&self) -> f64 {
        self.0.value()
    }

    #[getter]
    fn mult_budget(&self) -> u32 {
        self.0.mult_budget()
    }

    #[getter]
    fn abs_budget(&self) -> u32 {
        self.0.abs_budget()
    }

    fn bounds(&self) -> (f64, f64) {
        self.0.bounds()
    }

    fn __repr__(&self) -> String {
        format!("ErrValue({})", self.0)
    }
}

#[pyfunction]
fn ver_sin(x: f64) -> PyResult<PyErrValue> {
    rigor::ver_sin(ErrValue::exact(x).map_err(value_err)?).map(PyErrValue).map_err(value_err)
}

#[pyfunction]
fn ver_cos(x: f64) -> PyResult<PyErrValue> {
    rigor::ver_cos(ErrValue::exact(x).map_err(value_err)?).map(PyErrValue).map_err(value_err)
}

fn edges(e: [f64; 3]) -> EdgeTriple {
    EdgeTriple::from_array(e)
}

#[pyfunction]
fn lambda_(e: [f64; 3]) -> PyResult<f64> {
    geometry::lambda(&edges(e)).map_err(value_err)
}

#[pyfunction]
fn gamma(e: [f64; 3], i: usize) -> PyResult<f64> {
    geometry::gamma_i(&edges(e), i).map_err(value_err)
}

#[pyfunction]
fn h_system(e: [f64; 3]) -> PyResult<[f64; 3]> {
    geometry::h_system(&edges(e)).map_err(value_err)
}

#[pyfunction]
fn f0(e: [f64; 3]) -> PyResult<f64> {
    geometry::f0(&edges(e)).map_err(value_err)
}

#[pyfunction]
fn constants_hash() -> String {
    constraints::constants_hash()
}

/// Runs a traversal over numerator `ranges` at `depth` and writes the
/// certificate to `out`. Returns `(records, max_depth)`.
#[pyfunction]
#[pyo3(signature = (ranges, depth, out, workers=1, depth_cap=None))]
fn run(
    py: Python<'_>,
    ranges: [(i64, i64); 3],
    depth: u32,
    out: PathBuf,
    workers: usize,
    depth_cap: Option<u32>,
) -> PyResult<(u64, u32)> {
    let domain = Domain::new(depth, ranges).map_err(run_err)?;
    let mut cfg = RunConfig::new(domain, out);
    cfg.workers = workers;
    if let Some(c) = depth_cap {
        cfg.depth_cap = c;
    }
    let rep = py.detach(|| traversal::run(&cfg)).map_err(run_err)?;
    Ok((rep.records, rep.max_depth))
}

/// `None` if the certificate verifies, otherwise the first failure.
#[pyfunction]
#[pyo3(signature = (path, workers=1))]
fn verify(py: Python<'_>, path: PathBuf, workers: usize) -> PyResult<Option<String>> {
    let res = py.detach(|| traversal::verify_certificate_file(&path, workers)).map_err(run_err)?;
    Ok(res.err().map(|f| f.to_string()))
}

#[pymodule]
fn propeller(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySearchBox>()?;
    m.add_class::<PyErrValue>()?;
    m.add_function(wrap_pyfunction!(ver_sin, m)?)?;
    m.add_function(wrap_pyfunction!(ver_cos, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(h_system, m)?)?;
    m.add_function(wrap_pyfunction!(f0, m)?)?;
    m.add_function(wrap_pyfunction!(constants_hash, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
