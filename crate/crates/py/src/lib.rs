//! Python bindings. Structured results (regions, trees, reports) are
//! returned as plain dicts and lists built from their JSON form.

use std::fs::File;

use ipm_hull::cloud::{self, CloudConfig};
use ipm_hull::state::{self as st, ToleranceConfig};
use ipm_hull::{hull, laminate, separators, subsolution, Error};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn tolerance(tol: f64) -> PyResult<ToleranceConfig> {
    ToleranceConfig::new(tol).map_err(err)
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: for<'de> serde::Deserialize<'de>>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = match obj.extract::<String>() {
        Ok(s) => s,
        Err(_) => obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?,
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// A point `(rho, v, m)` of the five-dimensional state space.
#[pyclass(name = "State", module = "ipm_hull", frozen, eq, from_py_object)]
#[derive(Clone, Copy, PartialEq)]
struct PyState(st::State);

#[pymethods]
impl PyState {
    #[new]
    fn new(rho: f64, v: (f64, f64), m: (f64, f64)) -> Self {
        Self(st::State::new(rho, [v.0, v.1], [m.0, m.1]))
    }

    /// The state on the constitutive set with density `sign` and velocity `v`.
    #[staticmethod]
    fn on_k(sign: f64, v: (f64, f64)) -> Self {
        Self(st::State::on_k(sign, [v.0, v.1]))
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho
    }

    #[getter]
    fn v(&self) -> (f64, f64) {
        (self.0.v[0], self.0.v[1])
    }

    #[getter]
    fn m(&self) -> (f64, f64) {
        (self.0.m[0], self.0.m[1])
    }

    fn components(&self) -> [f64; 5] {
        self.0.components()
    }

    fn __add__(&self, other: &Self) -> Self {
        Self(self.0 + other.0)
    }

    fn __sub__(&self, other: &Self) -> Self {
        Self(self.0 - other.0)
    }

    fn __mul__(&self, t: f64) -> Self {
        Self(t * self.0)
    }

    fn __rmul__(&self, t: f64) -> Self {
        Self(t * self.0)
    }

    fn __repr__(&self) -> String {
        let z = &self.0;
        format!("State(rho={}, v=({}, {}), m=({}, {}))", z.rho, z.v[0], z.v[1], z.m[0], z.m[1])
    }
}

fn state_of(obj: &Bound<'_, PyAny>) -> PyResult<st::State> {
    if let Ok(z) = obj.cast::<PyState>() {
        return Ok(z.get().0);
    }
    from_py(obj)
}

#[pyfunction]
#[pyo3(signature = (z, tol = st::DEFAULT_EQ_TOL))]
fn in_k(z: &Bound<'_, PyAny>, tol: f64) -> PyResult<bool> {
    Ok(st::in_k(&state_of(z)?, &tolerance(tol)?))
}

#[pyfunction]
#[pyo3(signature = (z, tol = st::DEFAULT_EQ_TOL))]
fn in_wave_cone(z: &Bound<'_, PyAny>, tol: f64) -> PyResult<bool> {
    Ok(st::in_wave_cone(&state_of(z)?, &tolerance(tol)?))
}

#[pyfunction]
fn wave_cone_residuals(z: &Bound<'_, PyAny>) -> PyResult<[f64; 3]> {
    Ok(st::wave_cone_residuals(&state_of(z)?))
}

/// Realises a direction given as a dict or JSON string, e.g.
/// `{"form": "sheared", "rho": 2, "e": [1, 0], "ell": 3}`.
#[pyfunction]
fn realize(direction: &Bound<'_, PyAny>) -> PyResult<PyState> {
    let d: st::WaveDirection = from_py(direction)?;
    d.realize().map(PyState).map_err(err)
}

#[pyfunction]
fn sample_wave_cone(seed: u64, count: usize) -> Vec<PyState> {
    st::sample_wave_cone(seed, count).into_iter().map(PyState).collect()
}

#[pyfunction]
#[pyo3(signature = (z, tol = st::DEFAULT_EQ_TOL))]
fn classify<'py>(py: Python<'py>, z: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &hull::classify(&state_of(z)?, &tolerance(tol)?))
}

#[pyfunction]
#[pyo3(signature = (rho, v, tol = st::DEFAULT_EQ_TOL))]
fn k_range<'py>(py: Python<'py>, rho: f64, v: (f64, f64), tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let r = hull::k_range(rho, [v.0, v.1], &tolerance(tol)?).map_err(err)?;
    to_py(py, &r)
}

#[pyfunction]
fn k_bound(rho: f64, v: (f64, f64)) -> f64 {
    hull::k_bound(rho, [v.0, v.1])
}

#[pyfunction]
fn power_balance(z: &Bound<'_, PyAny>) -> PyResult<f64> {
    Ok(hull::power_balance(&state_of(z)?))
}

/// Value of one separating function, `"G1"` to `"G4"`.
#[pyfunction]
fn eval_g(name: &str, z: &Bound<'_, PyAny>) -> PyResult<f64> {
    let sep: separators::Separator = name.parse().map_err(err)?;
    Ok(sep.evaluate(&state_of(z)?))
}

#[pyfunction]
#[pyo3(signature = (z, tol = st::DEFAULT_EQ_TOL))]
fn separation_bound<'py>(py: Python<'py>, z: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &separators::separation_bound(&state_of(z)?, &tolerance(tol)?))
}

/// Laminate tree as nested dicts; raises `ValueError` outside the hull.
#[pyfunction]
#[pyo3(signature = (z, tol = st::DEFAULT_EQ_TOL))]
fn decompose<'py>(py: Python<'py>, z: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let tree = laminate::decompose(&state_of(z)?, &tolerance(tol)?).map_err(err)?;
    to_py(py, &tree)
}

#[pyfunction]
#[pyo3(signature = (tree, tol = st::DEFAULT_EQ_TOL))]
fn verify_tree<'py>(py: Python<'py>, tree: &Bound<'py, PyAny>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let tree: laminate::LaminateNode = from_py(tree)?;
    to_py(py, &laminate::verify_tree(&tree, &tolerance(tol)?))
}

/// Grows a cloud and returns `(points, summary)`; `points` is a list of
/// `(rho, v1, v2, m1, m2)` tuples.
#[pyfunction]
#[pyo3(signature = (config = None, tol = st::DEFAULT_EQ_TOL))]
fn grow_cloud<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
    tol: f64,
) -> PyResult<(Vec<[f64; 5]>, Bound<'py, PyAny>)> {
    let cfg: CloudConfig = match config {
        Some(c) => from_py(c)?,
        None => CloudConfig::default(),
    };
    let tol = tolerance(tol)?;
    let grown = py
        .detach(|| cloud::grow_cloud_with_tol(&cfg, &tol))
        .map_err(err)?;
    let report = cloud::containment_report(&grown.points, &tol);
    let summary = PyDict::new(py);
    summary.set_item("rounds", to_py(py, &grown.stats)?)?;
    summary.set_item("counts", to_py(py, &report.counts)?)?;
    summary.set_item("violations", report.violations.len())?;
    let points = grown.points.iter().map(|z| z.components()).collect();
    Ok((points, summary.into_any()))
}

#[pyfunction]
#[pyo3(signature = (points, rho, v, radius, tol = st::DEFAULT_EQ_TOL))]
fn k_coverage<'py>(
    py: Python<'py>,
    points: Vec<[f64; 5]>,
    rho: f64,
    v: (f64, f64),
    radius: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let states: Vec<_> = points.into_iter().map(st::State::from_components).collect();
    let c = cloud::k_coverage(&states, rho, [v.0, v.1], radius, &tolerance(tol)?).map_err(err)?;
    to_py(py, &c)
}

fn open(path: &str) -> PyResult<File> {
    File::open(path).map_err(|e| PyValueError::new_err(format!("{path}: {e}")))
}

/// Audit report for a field file.
#[pyfunction]
#[pyo3(signature = (path, tol = st::DEFAULT_EQ_TOL))]
fn audit_field<'py>(py: Python<'py>, path: &str, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let field = subsolution::read_field(open(path)?).map_err(err)?;
    to_py(py, &subsolution::audit_stationary(&field, &tolerance(tol)?))
}

/// Time-bound report and height-moment reconstruction for a series file.
#[pyfunction]
#[pyo3(signature = (path, tol = st::DEFAULT_EQ_TOL))]
fn time_bound<'py>(py: Python<'py>, path: &str, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let series = subsolution::read_series(open(path)?).map_err(err)?;
    let bound = subsolution::infinite_time_bound(&series, &tolerance(tol)?).map_err(err)?;
    let f = subsolution::f_of_t(&series).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("bound", to_py(py, &bound)?)?;
    out.set_item("f_of_t", to_py(py, &f)?)?;
    Ok(out.into_any())
}

#[pymodule]
#[pyo3(name = "ipm_hull")]
fn ipm_hull_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyState>()?;
    m.add("DEFAULT_EQ_TOL", st::DEFAULT_EQ_TOL)?;
    m.add_function(wrap_pyfunction!(in_k, m)?)?;
    m.add_function(wrap_pyfunction!(in_wave_cone, m)?)?;
    m.add_function(wrap_pyfunction!(wave_cone_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(sample_wave_cone, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(k_range, m)?)?;
    m.add_function(wrap_pyfunction!(k_bound, m)?)?;
    m.add_function(wrap_pyfunction!(power_balance, m)?)?;
    m.add_function(wrap_pyfunction!(eval_g, m)?)?;
    m.add_function(wrap_pyfunction!(separation_bound, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tree, m)?)?;
    m.add_function(wrap_pyfunction!(grow_cloud, m)?)?;
    m.add_function(wrap_pyfunction!(k_coverage, m)?)?;
    m.add_function(wrap_pyfunction!(audit_field, m)?)?;
    m.add_function(wrap_pyfunction!(time_bound, m)?)?;
    Ok(())
}
