//! Python bindings: universes, constraints, the five heuristics, the exact
//! solver and the frontier metrics.
//!
//! Objective points cross the boundary as `(risk, ret)` tuples; reference
//! frontier points as `(ret, variance)` as in the data files.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use moco_core::dataio::{self, SolutionRecord};
use moco_core::frontier::{self, ObjectivePoint};
use moco_core::heuristics::{self, Algorithm, SolveBudget};
use moco_core::{model, oracle, synthetic};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse().map_err(PyValueError::new_err)
}

fn points(pts: &[(f64, f64)]) -> Vec<ObjectivePoint> {
    pts.iter().map(|&(risk, ret)| ObjectivePoint::new(risk, ret, Default::default())).collect()
}

#[pyclass(name = "AssetUniverse", module = "moco", frozen)]
#[derive(Clone)]
struct PyUniverse(model::AssetUniverse);

#[pymethods]
impl PyUniverse {
    #[new]
    fn new(mu: Vec<f64>, stddev: Vec<f64>, corr: Vec<Vec<f64>>) -> PyResult<Self> {
        let flat = corr.into_iter().flatten().collect();
        model::AssetUniverse::new(mu, stddev, flat).map(Self).map_err(value_err)
    }

    /// Parses the OR-Library `port` text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        dataio::parse_universe(text).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        dataio::read_universe(&path).map(Self).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed=0))]
    fn random(n: usize, seed: u64) -> Self {
        Self(synthetic::random_universe(n, seed))
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn mu(&self) -> Vec<f64> {
        self.0.mu().to_vec()
    }

    #[getter]
    fn stddev(&self) -> Vec<f64> {
        self.0.stddev().to_vec()
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        (0..self.0.n()).map(|i| self.0.sigma_row(i).to_vec()).collect()
    }

    fn risk(&self, weights: Vec<f64>) -> PyResult<f64> {
        model::portfolio_risk(&self.0, &model::Portfolio::from_weights(weights, 0.0)).map_err(value_err)
    }

    fn ret(&self, weights: Vec<f64>) -> PyResult<f64> {
        model::portfolio_return(&self.0, &model::Portfolio::from_weights(weights, 0.0)).map_err(value_err)
    }

    fn objective(&self, weights: Vec<f64>, lam: f64) -> PyResult<f64> {
        model::scalarized_objective(&self.0, &model::Portfolio::from_weights(weights, 0.0), lam).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("AssetUniverse(n={})", self.0.n())
    }
}

#[pyclass(name = "ConstraintSet", module = "moco", frozen)]
#[derive(Clone)]
struct PyConstraints(model::ConstraintSet);

#[pymethods]
impl PyConstraints {
    /// Uniform bounds for every asset.
    #[new]
    #[pyo3(signature = (n, k, eps=0.01, delta=1.0, tol=1e-9))]
    fn new(n: usize, k: usize, eps: f64, delta: f64, tol: f64) -> PyResult<Self> {
        model::ConstraintSet::uniform(n, k, eps, delta).map(|c| Self(c.with_tol(tol))).map_err(value_err)
    }

    #[staticmethod]
    #[pyo3(signature = (k, eps, delta, tol=1e-9))]
    fn per_asset(k: usize, eps: Vec<f64>, delta: Vec<f64>, tol: f64) -> PyResult<Self> {
        model::ConstraintSet::new(k, eps, delta).map(|c| Self(c.with_tol(tol))).map_err(value_err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    /// `(feasible, budget residual, assets held)`.
    fn check(&self, weights: Vec<f64>) -> (bool, f64, usize) {
        let r = model::check_feasibility(&model::Portfolio::from_weights(weights, self.0.tol()), &self.0);
        (r.feasible, r.budget_residual, r.cardinality_actual)
    }

    /// Decodes a selection and nonnegative scores into a feasible portfolio.
    fn repair(&self, selection: Vec<usize>, raw: Vec<f64>) -> PyResult<Vec<f64>> {
        model::repair(&selection, &raw, &self.0).map(|p| p.weights).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("ConstraintSet(n={}, k={})", self.0.n(), self.0.k())
    }
}

#[pyclass(name = "ReferenceFrontier", module = "moco", frozen)]
#[derive(Clone)]
struct PyReference(dataio::ReferenceFrontier);

#[pymethods]
impl PyReference {
    #[new]
    fn new(points: Vec<(f64, f64)>) -> PyResult<Self> {
        dataio::ReferenceFrontier::new(points).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        dataio::read_reference_frontier(&path).map(Self).map_err(value_err)
    }

    /// Efficient frontier with only the budget and nonnegativity constraints.
    #[staticmethod]
    #[pyo3(signature = (universe, dlambda=0.001))]
    fn unconstrained(py: Python<'_>, universe: &PyUniverse, dlambda: f64) -> PyResult<Self> {
        let grid = model::lambda_grid(dlambda).map_err(value_err)?;
        py.detach(|| oracle::unconstrained_frontier(&universe.0, &grid)).map(Self).map_err(runtime_err)
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.0.points().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Solution", module = "moco", frozen, get_all)]
struct PySolution {
    lam: f64,
    weights: Vec<f64>,
    risk: f64,
    ret: f64,
    objective: f64,
    evaluations: u64,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!("Solution(lam={}, objective={}, risk={}, ret={})", self.lam, self.objective, self.risk, self.ret)
    }
}

/// Runs one heuristic at one `lam`.
#[pyfunction]
#[pyo3(signature = (algorithm, universe, constraints, lam, max_evaluations=200_000, max_seconds=10.0, seed=0))]
fn solve(
    py: Python<'_>,
    algorithm: &str,
    universe: &PyUniverse,
    constraints: &PyConstraints,
    lam: f64,
    max_evaluations: u64,
    max_seconds: f64,
    seed: u64,
) -> PyResult<PySolution> {
    let alg = self::algorithm(algorithm)?;
    let budget = SolveBudget { max_evaluations, max_seconds, seed };
    let o = py
        .detach(|| heuristics::solve_detailed(alg, &universe.0, &constraints.0, lam, &budget))
        .map_err(value_err)?;
    Ok(PySolution {
        lam,
        weights: o.portfolio.weights,
        risk: o.risk,
        ret: o.ret,
        objective: o.objective,
        evaluations: o.evaluations,
    })
}

/// Runs one heuristic over the grid `0, dlambda, ..., 1`. Steps that found
/// nothing are left out.
#[pyfunction]
#[pyo3(signature = (algorithm, universe, constraints, dlambda=0.02, max_evaluations=200_000, max_seconds=10.0, seed=0))]
fn sweep(
    py: Python<'_>,
    algorithm: &str,
    universe: &PyUniverse,
    constraints: &PyConstraints,
    dlambda: f64,
    max_evaluations: u64,
    max_seconds: f64,
    seed: u64,
) -> PyResult<Vec<PySolution>> {
    let alg = self::algorithm(algorithm)?;
    let grid = model::lambda_grid(dlambda).map_err(value_err)?;
    let budget = SolveBudget { max_evaluations, max_seconds, seed };
    let r = py.detach(|| heuristics::run_sweep(alg, &universe.0, &constraints.0, &grid, &budget)).map_err(value_err)?;
    Ok(r.entries
        .into_iter()
        .filter_map(|e| {
            let o = e.outcome.ok()?;
            Some(PySolution {
                lam: e.lambda,
                weights: o.portfolio.weights,
                risk: o.risk,
                ret: o.ret,
                objective: o.objective,
                evaluations: o.evaluations,
            })
        })
        .collect())
}

/// Global optimum by enumerating every K-subset.
#[pyfunction]
fn exact_solve(py: Python<'_>, universe: &PyUniverse, constraints: &PyConstraints, lam: f64) -> PyResult<PySolution> {
    let x = py.detach(|| oracle::exact_solve(&universe.0, &constraints.0, lam)).map_err(value_err)?;
    Ok(PySolution {
        lam,
        weights: x.portfolio.weights,
        risk: x.risk,
        ret: x.ret,
        objective: x.objective,
        evaluations: x.subsets_enumerated,
    })
}

#[pyfunction]
fn lambda_grid(dlambda: f64) -> PyResult<Vec<f64>> {
    model::lambda_grid(dlambda).map_err(value_err)
}

/// Non-dominated `(risk, ret)` points, lowest risk first.
#[pyfunction]
fn non_dominated(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    frontier::non_dominated_subset(&self::points(&points)).iter().map(|p| (p.risk, p.ret)).collect()
}

#[pyfunction]
#[pyo3(signature = (reference, points, normalize=false))]
fn igd(reference: &PyReference, points: Vec<(f64, f64)>, normalize: bool) -> PyResult<f64> {
    frontier::igd_with(&reference.0, &self::points(&points), normalize).map_err(value_err)
}

/// Area dominated by `(risk, ret)` points in `(risk, -ret)` space, up to
/// `reference` given in that space.
#[pyfunction]
fn hypervolume(points: Vec<(f64, f64)>, reference: (f64, f64)) -> PyResult<f64> {
    frontier::hypervolume_2d(&self::points(&points), [reference.0, reference.1]).map_err(value_err)
}

/// Mean, median, min and max percentage deviation of a sweep from the
/// reference frontier.
#[pyfunction]
#[pyo3(signature = (reference, solutions, dlambda=0.02))]
fn mpe(reference: &PyReference, solutions: Vec<PyRef<'_, PySolution>>, dlambda: f64) -> PyResult<(f64, f64, f64, f64)> {
    let grid = model::lambda_grid(dlambda).map_err(value_err)?;
    let records: Vec<SolutionRecord> = solutions
        .iter()
        .map(|s| SolutionRecord {
            lambda: s.lam,
            algorithm: "PY".into(),
            feasible: true,
            risk: s.risk,
            ret: s.ret,
            weights: s.weights.clone(),
        })
        .collect();
    let v = frontier::vlambda_from_records(&grid, &records).map_err(value_err)?;
    let m = frontier::mpe_stats(&v, &reference.0).map_err(value_err)?;
    Ok((m.mean, m.median, m.min, m.max))
}

#[pymodule]
fn moco(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUniverse>()?;
    m.add_class::<PyConstraints>()?;
    m.add_class::<PyReference>()?;
    m.add_class::<PySolution>()?;
    m.add("ALGORITHMS", Algorithm::ALL.map(|a| a.id()).to_vec())?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(exact_solve, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_grid, m)?)?;
    m.add_function(wrap_pyfunction!(non_dominated, m)?)?;
    m.add_function(wrap_pyfunction!(igd, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(mpe, m)?)?;
    Ok(())
}
