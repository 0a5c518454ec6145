//! Python bindings for `qkd-rawdata`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qkd_rawdata::analysis::{self, Curve, SearchConfig};
use qkd_rawdata::infotheory::{self, Attack};
use qkd_rawdata::linalg::{ComplexMatrix, DensityOperator, C64 as Complex64};
use qkd_rawdata::povm::{self, OptimizerConfig};
use qkd_rawdata::states::{self, FamilyPoint};
use qkd_rawdata::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NoSignChange { .. } | Error::NoFeasibleSample { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPyErr<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPyErr<T> for qkd_rawdata::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn curve(name: &str) -> PyResult<Curve> {
    name.parse().map_err(PyValueError::new_err)
}

fn point(epsilon: f64, c22: Option<f64>) -> PyResult<FamilyPoint> {
    let c22 = match c22 {
        Some(c) => c,
        None => infotheory::min_abs_c22(epsilon).py()?,
    };
    FamilyPoint::feasible(epsilon, c22).py()
}

fn rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.dim())
        .map(|i| (0..m.dim()).map(|j| m.get(i, j)).collect())
        .collect()
}

fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(ComplexMatrix::from_fn(n, |i, j| rows[i][j]))
}

/// Eve's conditioned ancilla states with their priors.
#[pyclass(frozen, module = "qkd_rawdata_py")]
pub struct Ensemble(states::Ensemble);

#[pymethods]
impl Ensemble {
    #[getter]
    fn priors(&self) -> Vec<f64> {
        self.0.priors.clone()
    }

    fn states(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.states.iter().map(|s| rows(s.matrix())).collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// `S(average) - sum p S(rho)` in bits.
    fn hsw_bound(&self) -> f64 {
        infotheory::hsw_bound(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Ensemble(members={}, dim={})", self.0.len(), self.0.dim())
    }
}

/// A measurement given by its positive elements.
#[pyclass(frozen, module = "qkd_rawdata_py")]
pub struct Povm(povm::Povm);

#[pymethods]
impl Povm {
    #[new]
    fn new(elements: Vec<Vec<Vec<Complex64>>>) -> PyResult<Self> {
        let elements = elements
            .into_iter()
            .map(matrix)
            .collect::<PyResult<Vec<_>>>()?;
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Ok(Self(povm::Povm::new(elements, labels).py()?))
    }

    fn elements(&self) -> Vec<Vec<Vec<Complex64>>> {
        self.0.elements().iter().map(rows).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels().to_vec()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn completeness_residual(&self) -> f64 {
        self.0.completeness_residual()
    }

    fn min_eigenvalue(&self) -> f64 {
        self.0.min_eigenvalue()
    }

    fn max_imag(&self) -> f64 {
        self.0.max_imag()
    }

    /// Compression onto the given coordinate axes.
    fn restrict(&self, axes: Vec<usize>) -> PyResult<Self> {
        if axes.iter().any(|&a| a >= self.0.dim()) {
            return Err(PyValueError::new_err("axis out of range"));
        }
        Ok(Self(self.0.restrict(&axes)))
    }

    fn conjugate(&self) -> Self {
        Self(povm::conjugate_povm(&self.0))
    }

    /// `weight * self + (1 - weight) * other`, outcome by outcome.
    fn combine(&self, other: &Povm, weight: f64) -> PyResult<Self> {
        Ok(Self(povm::convex_combine(&self.0, &other.0, weight).py()?))
    }

    fn __repr__(&self) -> String {
        format!("Povm(outcomes={}, dim={})", self.0.len(), self.0.dim())
    }
}

#[pyclass(frozen, get_all, module = "qkd_rawdata_py")]
pub struct OptimizeResult {
    value: f64,
    best_restart: usize,
    restart_values: Vec<f64>,
    povm: Py<Povm>,
}

#[pymethods]
impl OptimizeResult {
    fn __repr__(&self) -> String {
        format!(
            "OptimizeResult(value={}, best_restart={})",
            self.value, self.best_restart
        )
    }
}

#[pyclass(frozen, get_all, module = "qkd_rawdata_py")]
pub struct Threshold {
    curve: String,
    epsilon_star: f64,
    qber: f64,
    residual: f64,
    iterations: usize,
}

#[pymethods]
impl Threshold {
    fn __repr__(&self) -> String {
        format!(
            "Threshold(curve={:?}, epsilon_star={}, qber={})",
            self.curve, self.epsilon_star, self.qber
        )
    }
}

#[pyclass(frozen, get_all, module = "qkd_rawdata_py")]
pub struct SearchReport {
    epsilon: f64,
    trials: usize,
    accepted: usize,
    best_value: f64,
    best_trial: usize,
    best_parameters: Vec<f64>,
    symmetric_optimum: f64,
    excess: f64,
    near_optimal: Vec<usize>,
    /// `(trial, kind, accepted, value)` per sample.
    samples: Vec<(usize, String, bool, Option<f64>)>,
    json: String,
}

#[pymethods]
impl SearchReport {
    fn to_json(&self) -> String {
        self.json.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "SearchReport(epsilon={}, trials={}, best_value={}, excess={})",
            self.epsilon, self.trials, self.best_value, self.excess
        )
    }
}

#[pyfunction]
fn phi(x: f64) -> PyResult<f64> {
    infotheory::phi(x).py()
}

#[pyfunction]
fn qber(epsilon: f64) -> f64 {
    analysis::qber(epsilon)
}

#[pyfunction]
fn mi_alice_bob(epsilon: f64) -> PyResult<f64> {
    infotheory::mi_alice_bob(epsilon).py()
}

#[pyfunction]
fn mi_eve_analytic(c22: f64) -> PyResult<f64> {
    infotheory::mi_eve_analytic(c22).py()
}

#[pyfunction]
fn mi_eve_optimal(epsilon: f64) -> PyResult<f64> {
    infotheory::mi_eve_optimal(epsilon).py()
}

#[pyfunction]
fn min_abs_c22(epsilon: f64) -> PyResult<f64> {
    infotheory::min_abs_c22(epsilon).py()
}

#[pyfunction]
fn hsw_optimal(epsilon: f64) -> PyResult<f64> {
    infotheory::hsw_optimal(epsilon).py()
}

/// `attack` is "raw-analytic" or "hsw".
#[pyfunction]
#[pyo3(signature = (epsilon, attack = "raw-analytic"))]
fn key_rate(epsilon: f64, attack: &str) -> PyResult<f64> {
    let attack = match attack {
        "raw-analytic" => Attack::RawAnalytic,
        "hsw" => Attack::Hsw,
        other => return Err(PyValueError::new_err(format!("unknown attack '{other}'"))),
    };
    infotheory::key_rate(epsilon, attack).py()
}

/// `(separability, concurrence)` at a family point.
#[pyfunction]
fn entanglement_numbers(epsilon: f64, c22: f64) -> PyResult<(f64, f64)> {
    let n = infotheory::entanglement_numbers(&point(epsilon, Some(c22))?).py()?;
    Ok((n.separability, n.concurrence))
}

/// Concurrence of an arbitrary two-qubit density matrix.
#[pyfunction]
fn concurrence(rho: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let rho = DensityOperator::new(matrix(rho)?).py()?;
    infotheory::wootters_concurrence(&rho).py()
}

#[pyfunction]
fn eve_curve(curve_name: &str, epsilon: f64) -> PyResult<f64> {
    analysis::eve_curve(curve(curve_name)?, epsilon).py()
}

#[pyfunction]
#[pyo3(signature = (curve_name, tol = 1e-12))]
fn find_threshold(curve_name: &str, tol: f64) -> PyResult<Threshold> {
    let r = analysis::find_threshold(curve(curve_name)?, tol).py()?;
    Ok(Threshold {
        curve: r.curve.name().into(),
        epsilon_star: r.epsilon_star,
        qber: r.qber,
        residual: r.residual,
        iterations: r.iterations,
    })
}

#[pyfunction]
fn max_entropy_c22(epsilon: f64) -> PyResult<f64> {
    analysis::max_entropy_c22(epsilon).py()
}

/// `(epsilon, I_AB, I_honest, I_maxent, I_minconc, I_hsw, qber)`
type ScanTuple = (f64, f64, f64, f64, f64, f64, f64);

#[pyfunction]
#[pyo3(signature = (start = 0.0, stop = 0.5, step = 0.01))]
fn scan(start: f64, stop: f64, step: f64) -> PyResult<Vec<ScanTuple>> {
    let grid = analysis::epsilon_grid(start, stop, step).py()?;
    Ok(analysis::scan_curves(&grid)
        .py()?
        .into_iter()
        .map(|r| {
            (
                r.epsilon, r.i_ab, r.honest, r.maxent, r.minconc, r.hsw, r.qber,
            )
        })
        .collect())
}

/// Joint table `p[bob][alice]` over z+, z-, x+, x-; `c22` defaults to the
/// smallest feasible magnitude.
#[pyfunction]
#[pyo3(signature = (epsilon, c22 = None))]
fn joint_table(epsilon: f64, c22: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let rho = states::bell_diagonal_state(&point(epsilon, c22)?).py()?;
    Ok(states::joint_table(&rho).py()?.rows())
}

#[pyfunction]
#[pyo3(signature = (epsilon, n, seed = 0, c22 = None))]
fn simulate_raw_data(
    py: Python<'_>,
    epsilon: f64,
    n: u64,
    seed: u64,
    c22: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let p = point(epsilon, c22)?;
    Ok(py
        .detach(|| states::simulate_raw_data(&p, n, seed))
        .py()?
        .rows())
}

#[pyfunction]
#[pyo3(signature = (epsilon, c22 = None))]
fn conditioned_ancilla(epsilon: f64, c22: Option<f64>) -> PyResult<Ensemble> {
    Ok(Ensemble(
        states::conditioned_ancilla(&point(epsilon, c22)?).py()?,
    ))
}

#[pyfunction]
#[pyo3(signature = (epsilon, c22 = None))]
fn analytic_povm(epsilon: f64, c22: Option<f64>) -> PyResult<Povm> {
    Ok(Povm(povm::analytic_povm(&point(epsilon, c22)?).py()?))
}

#[pyfunction]
#[pyo3(signature = (epsilon, c22 = None))]
fn canonical_povm(epsilon: f64, c22: Option<f64>) -> PyResult<Povm> {
    Ok(Povm(povm::canonical_povm(&point(epsilon, c22)?).py()?))
}

#[pyfunction]
fn accessible_info(ensemble: &Ensemble, m: &Povm) -> PyResult<f64> {
    povm::accessible_info(&ensemble.0, &m.0).py()
}

#[pyfunction]
#[pyo3(signature = (ensemble, restarts = 20, seed = 0, max_iterations = 4000, outcome_budget = 16))]
fn optimize_povm(
    py: Python<'_>,
    ensemble: &Ensemble,
    restarts: usize,
    seed: u64,
    max_iterations: usize,
    outcome_budget: usize,
) -> PyResult<OptimizeResult> {
    let cfg = OptimizerConfig {
        restarts,
        seed,
        max_iterations,
        outcome_budget,
        ..OptimizerConfig::default()
    };
    let r = py.detach(|| povm::optimize_povm(&ensemble.0, &cfg)).py()?;
    Ok(OptimizeResult {
        value: r.value,
        best_restart: r.best_restart,
        restart_values: r.restarts.iter().map(|s| s.value).collect(),
        povm: Py::new(py, Povm(r.povm))?,
    })
}

#[pyfunction]
#[pyo3(signature = (epsilon, trials = 200, seed = 0, restarts = 4))]
fn nonsymmetric_search(
    py: Python<'_>,
    epsilon: f64,
    trials: usize,
    seed: u64,
    restarts: usize,
) -> PyResult<SearchReport> {
    let mut cfg = SearchConfig::default();
    cfg.optimizer.restarts = restarts;
    let r = py
        .detach(|| analysis::nonsymmetric_search(epsilon, trials, seed, &cfg))
        .py()?;
    let json = serde_json::to_string(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(SearchReport {
        epsilon: r.epsilon,
        trials: r.trials,
        accepted: r.accepted,
        best_value: r.best_value,
        best_trial: r.best_trial,
        best_parameters: r.best_parameters.to_vec(),
        symmetric_optimum: r.symmetric_optimum,
        excess: r.excess,
        near_optimal: r.near_optimal,
        samples: r
            .samples
            .iter()
            .map(|s| {
                let kind = serde_json::to_value(s.kind)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from));
                (s.trial, kind.unwrap_or_default(), s.accepted, s.value)
            })
            .collect(),
        json,
    })
}

#[pymodule]
pub fn qkd_rawdata_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Ensemble>()?;
    m.add_class::<Povm>()?;
    m.add_class::<OptimizeResult>()?;
    m.add_class::<Threshold>()?;
    m.add_class::<SearchReport>()?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(qber, m)?)?;
    m.add_function(wrap_pyfunction!(mi_alice_bob, m)?)?;
    m.add_function(wrap_pyfunction!(mi_eve_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(mi_eve_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(min_abs_c22, m)?)?;
    m.add_function(wrap_pyfunction!(hsw_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(key_rate, m)?)?;
    m.add_function(wrap_pyfunction!(entanglement_numbers, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(eve_curve, m)?)?;
    m.add_function(wrap_pyfunction!(find_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(max_entropy_c22, m)?)?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(joint_table, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_raw_data, m)?)?;
    m.add_function(wrap_pyfunction!(conditioned_ancilla, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_povm, m)?)?;
    m.add_function(wrap_pyfunction!(canonical_povm, m)?)?;
    m.add_function(wrap_pyfunction!(accessible_info, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_povm, m)?)?;
    m.add_function(wrap_pyfunction!(nonsymmetric_search, m)?)?;
    Ok(())
}
