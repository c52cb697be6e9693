//! Python module `galois_scope_py`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use galois_scope::cli::config::settings_from;
use galois_scope::expr;
use galois_scope::locus;
use galois_scope::permgroup;
use galois_scope::pipeline::{self, AnalysisConfig};
use galois_scope::solve::{Tolerances, Window};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parsed elementary expression in `x`.
#[pyclass(name = "Expr", frozen)]
struct PyExpr {
    inner: expr::Expr,
}

#[pymethods]
impl PyExpr {
    #[new]
    fn new(source: &str) -> PyResult<Self> {
        expr::parse(source).map(|inner| PyExpr { inner }).map_err(err)
    }

    fn differentiate(&self) -> PyExpr {
        PyExpr {
            inner: expr::differentiate(&self.inner),
        }
    }

    /// Value at `x`; raises on a pole.
    fn evaluate(&self, x: Complex64) -> PyResult<Complex64> {
        let r = expr::evaluate(&self.inner, x);
        if r.pole_flag {
            return Err(PyValueError::new_err(format!("pole at {x}")));
        }
        Ok(r.value)
    }

    fn tower_depth(&self) -> usize {
        expr::tower_depth(&self.inner)
    }

    fn is_entire(&self) -> bool {
        self.inner.is_entire()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.inner.to_string())
    }
}

/// Permutation of `0..n`.
#[pyclass(name = "Perm", frozen, eq, hash)]
#[derive(PartialEq, Eq, Hash)]
struct PyPerm {
    inner: permgroup::Perm,
}

#[pymethods]
impl PyPerm {
    /// `Perm(n, "(0 1)(2 3)")`
    #[new]
    fn new(degree: usize, cycles: &str) -> PyResult<Self> {
        permgroup::Perm::parse_cycles(degree, cycles)
            .map(|inner| PyPerm { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn from_images(images: Vec<usize>) -> PyResult<Self> {
        permgroup::Perm::new(images).map(|inner| PyPerm { inner }).map_err(err)
    }

    fn images(&self) -> Vec<usize> {
        self.inner.images().to_vec()
    }

    /// `self` first, then `other`.
    fn then(&self, other: &PyPerm) -> PyPerm {
        PyPerm {
            inner: self.inner.then(&other.inner),
        }
    }

    fn inverse(&self) -> PyPerm {
        PyPerm {
            inner: self.inner.inverse(),
        }
    }

    fn cycle_type(&self) -> Vec<usize> {
        self.inner.cycle_type()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Perm({}, {:?})", self.inner.degree(), self.inner.to_string())
    }
}

fn perms(gens: &[PyRef<'_, PyPerm>]) -> Vec<permgroup::Perm> {
    gens.iter().map(|g| g.inner.clone()).collect()
}

#[pyfunction]
fn parse(source: &str) -> PyResult<PyExpr> {
    PyExpr::new(source)
}

/// `(location, order, value)` for each critical point in the window.
#[pyfunction]
#[pyo3(signature = (source, domain = (-8.0, 8.0, -16.0, 16.0), grid = 4.0))]
fn critical_points(
    py: Python<'_>,
    source: &str,
    domain: (f64, f64, f64, f64),
    grid: f64,
) -> PyResult<Vec<(Complex64, u32, Complex64)>> {
    let f = expr::parse(source).map_err(err)?;
    let w = Window::new(domain.0, domain.1, domain.2, domain.3, grid).map_err(err)?;
    let search = py
        .detach(|| locus::find_critical_points(&f, &w, &Tolerances::default()))
        .map_err(err)?;
    Ok(search.points.iter().map(|p| (p.location, p.order, p.value)).collect())
}

fn config(options: Option<&Bound<'_, PyDict>>) -> PyResult<AnalysisConfig> {
    let mut values = BTreeMap::new();
    if let Some(d) = options {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            values.insert(key.replace('_', "-"), v.str()?.to_string());
        }
    }
    settings_from(&values).map(|s| s.analysis).map_err(err)
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Loop generators as a report dict. `options` takes the CLI setting keys.
#[pyfunction]
#[pyo3(signature = (source, options = None))]
fn monodromy<'py>(py: Python<'py>, source: &str, options: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(options)?;
    let report = py.detach(|| pipeline::monodromy(source, &cfg)).map_err(err)?;
    json_loads(py, &serde_json::to_string(&report).map_err(err)?)
}

/// Full analysis report dict, same schema as `galois-scope analyze`.
#[pyfunction]
#[pyo3(signature = (source, options = None))]
fn analyze<'py>(py: Python<'py>, source: &str, options: Option<&Bound<'py, PyDict>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(options)?;
    let report = py.detach(|| pipeline::analyze(source, &cfg)).map_err(err)?;
    json_loads(py, &serde_json::to_string(&report).map_err(err)?)
}

/// Group order, or `None` when enumeration hit `cap`.
#[pyfunction]
#[pyo3(signature = (degree, gens, cap = permgroup::DEFAULT_CLOSURE_CAP))]
fn closure_size(degree: usize, gens: Vec<PyRef<'_, PyPerm>>, cap: usize) -> PyResult<Option<usize>> {
    let c = permgroup::closure(degree, &perms(&gens), cap).map_err(err)?;
    Ok(c.size.exact())
}

#[pyfunction]
fn orbits(degree: usize, gens: Vec<PyRef<'_, PyPerm>>) -> PyResult<Vec<Vec<usize>>> {
    permgroup::orbits(degree, &perms(&gens)).map_err(err)
}

#[pyfunction]
fn block_systems(degree: usize, gens: Vec<PyRef<'_, PyPerm>>) -> PyResult<Vec<Vec<Vec<usize>>>> {
    permgroup::block_systems(degree, &perms(&gens)).map_err(err)
}

#[pyfunction]
fn is_primitive(degree: usize, gens: Vec<PyRef<'_, PyPerm>>) -> PyResult<bool> {
    permgroup::is_primitive(degree, &perms(&gens)).map_err(err)
}

/// `(solvable, sizes)`; `solvable` is `None` when the cap was hit.
#[pyfunction]
#[pyo3(signature = (degree, gens, cap = permgroup::DEFAULT_CLOSURE_CAP))]
fn derived_series(degree: usize, gens: Vec<PyRef<'_, PyPerm>>, cap: usize) -> PyResult<(Option<bool>, Vec<Option<usize>>)> {
    let d = permgroup::derived_series(degree, &perms(&gens), cap).map_err(err)?;
    Ok((d.solvable, d.sizes.iter().map(|s| s.exact()).collect()))
}

#[pymodule]
fn galois_scope_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_class::<PyPerm>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(critical_points, m)?)?;
    m.add_function(wrap_pyfunction!(monodromy, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(closure_size, m)?)?;
    m.add_function(wrap_pyfunction!(orbits, m)?)?;
    m.add_function(wrap_pyfunction!(block_systems, m)?)?;
    m.add_function(wrap_pyfunction!(is_primitive, m)?)?;
    m.add_function(wrap_pyfunction!(derived_series, m)?)?;
    m.add("SCHEMA", pipeline::SCHEMA)?;
    Ok(())
}
