//! Python bindings for `exotic_bseries`.

use std::collections::BTreeMap;

use exotic_bseries::growth::{cm_weight, enumerate_trees, linear_extensions, realization_coefficient, tree_factorial, GrowthRule};
use exotic_bseries::jets::Scalar;
use exotic_bseries::multiindex::{counting_map, phi_expand, symmetry_factor_multi, FeynmanMultiIndex};
use exotic_bseries::series::{self, Method};
use exotic_bseries::verification::{self, McConfig};
use exotic_bseries::{merged_poset, ExoticTree};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Exotic coloured tree in canonical form, e.g. `ExoticTree("o(a(b#1),a(b#1))")`.
#[pyclass(name = "ExoticTree", module = "exotic_bseries", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTree(ExoticTree);

#[pymethods]
impl PyTree {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        ExoticTree::parse(text).map(PyTree).map_err(value_error)
    }

    #[getter]
    fn key(&self) -> String {
        self.0.key().to_string()
    }

    #[getter]
    fn exotic_order(&self) -> usize {
        self.0.exotic_order()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    #[getter]
    fn alpha_count(&self) -> usize {
        self.0.alpha_count()
    }

    #[getter]
    fn beta_count(&self) -> usize {
        self.0.beta_count()
    }

    #[getter]
    fn symmetry(&self) -> u64 {
        self.0.automorphism_count()
    }

    /// Exact rationals are returned as `"p/q"` strings.
    #[getter]
    fn tree_factorial(&self) -> String {
        tree_factorial(&self.0).to_string()
    }

    #[getter]
    fn cm_weight(&self) -> String {
        cm_weight(&self.0).to_string()
    }

    #[getter]
    fn realization_coefficient(&self) -> String {
        realization_coefficient(&self.0).to_string()
    }

    #[getter]
    fn linear_extensions(&self) -> String {
        linear_extensions(&merged_poset(&self.0)).to_string()
    }

    #[getter]
    fn multi_index(&self) -> String {
        counting_map(&self.0).to_string()
    }

    fn __str__(&self) -> String {
        self.key()
    }

    fn __repr__(&self) -> String {
        format!("ExoticTree({:?})", self.0.key())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0.key() == other.0.key()
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.0.key().hash(&mut h);
        h.finish()
    }
}

/// Canonical trees grouped by edge count, `0..=max_order`.
#[pyfunction]
#[pyo3(signature = (max_order, rule = None))]
fn enumerate(py: Python<'_>, max_order: usize, rule: Option<&str>) -> PyResult<Vec<Vec<PyTree>>> {
    let rule: GrowthRule = match rule {
        Some(r) => r.parse().map_err(|e: exotic_bseries::growth::RuleParseError| value_error(format!("invalid rule `{}`", e.0)))?,
        None => GrowthRule::default(),
    };
    let levels = py.detach(|| enumerate_trees(max_order, Some(&rule)));
    Ok(levels.into_iter().map(|l| l.into_iter().map(PyTree).collect()).collect())
}

#[pyclass(name = "MultiIndex", module = "exotic_bseries", frozen)]
struct PyMultiIndex(FeynmanMultiIndex);

#[pymethods]
impl PyMultiIndex {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(PyMultiIndex).map_err(value_error)
    }

    #[getter]
    fn length(&self) -> usize {
        self.0.gradings().length
    }

    #[getter]
    fn populated(&self) -> bool {
        self.0.is_populated()
    }

    #[getter]
    fn symmetry_factor(&self) -> String {
        symmetry_factor_multi(&self.0).to_string()
    }

    /// `[(tree, weight)]` with weight `σ_F/σ`.
    #[pyo3(signature = (guard = 6))]
    fn phi(&self, guard: usize) -> PyResult<Vec<(PyTree, String)>> {
        let terms = phi_expand(&self.0, guard).map_err(value_error)?;
        Ok(terms.into_iter().map(|(t, w)| (PyTree(t), w.to_string())).collect())
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("MultiIndex({:?})", self.0.to_string())
    }
}

/// Scalar SDE `du = α(u)dt + β(u)dW` with observable `f`, built from its JSON spec.
#[pyclass(name = "SdeProblem", module = "exotic_bseries", frozen)]
struct PyProblem(series::SdeProblem);

#[pymethods]
impl PyProblem {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        series::SdeProblem::from_json(text).map(PyProblem).map_err(value_error)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    /// Coefficients of `t^k` for `k ≤ order`, as strings.
    #[pyo3(signature = (order, method = "trees"))]
    fn expand(&self, py: Python<'_>, order: usize, method: &str) -> PyResult<Vec<String>> {
        let method: Method = method.parse().map_err(value_error)?;
        let s = py.detach(|| series::expand(&self.0, order, method)).map_err(value_error)?;
        Ok(s.coeffs.iter().map(Scalar::to_string).collect())
    }

    /// Truncated series evaluated at time `t` in floating point.
    #[pyo3(signature = (t, order, method = "trees"))]
    fn evaluate(&self, py: Python<'_>, t: f64, order: usize, method: &str) -> PyResult<f64> {
        let method: Method = method.parse().map_err(value_error)?;
        let s = py.detach(|| series::expand(&self.0, order, method)).map_err(value_error)?;
        Ok(series::evaluate_series(&s, &Scalar::Float(t)).to_f64())
    }

    /// `(mean, std_error)` of `f(u_t)` under Euler–Maruyama.
    #[pyo3(signature = (t, paths = 100_000, step = 1e-3, seed = 0))]
    fn monte_carlo(&self, py: Python<'_>, t: f64, paths: usize, step: f64, seed: u64) -> PyResult<(f64, f64)> {
        let cfg = McConfig::new(t, step, paths, seed).map_err(value_error)?;
        let float = series::SdeProblem { u0: Scalar::Float(self.0.u0.to_f64()), mode: exotic_bseries::jets::Mode::Float, ..self.0.clone() };
        let est = py.detach(|| verification::euler_maruyama_estimate(&float, &cfg)).map_err(value_error)?;
        Ok((est.mean, est.std_error))
    }
}

/// Identity suite results as `{identity: passed}`.
#[pyfunction]
fn verify(py: Python<'_>, max_order: usize) -> BTreeMap<String, bool> {
    let report = py.detach(|| verification::identity_suite(max_order));
    report.iter().map(|r| (r.identity.to_string(), r.passed())).collect()
}

#[pymodule]
#[pyo3(name = "exotic_bseries")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyMultiIndex>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(enumerate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
