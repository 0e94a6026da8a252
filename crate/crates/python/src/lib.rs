//! Python bindings: problems, solver configuration, solves, LPs and the
//! benchmark harness.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use fslp::bench::{self, BenchOptions, ProblemInstance, Suite};
use fslp::lp::{read_hex_dump, solve_lp, write_hex_dump, SimplexOptions};
use fslp::model::{classify_solution, infeasibility, NonlinearResidual};
use fslp::problems::analytic_min_time;
use fslp::{Acceleration, EvalCounters, FslpError};

fn err(e: FslpError) -> PyErr {
    match e {
        FslpError::InvalidConfig(_)
        | FslpError::InvalidSpec(_)
        | FslpError::InvalidProblem(_)
        | FslpError::Dimension { .. }
        | FslpError::Precondition(_)
        | FslpError::Json(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>, ncols: usize, what: &str) -> PyResult<DMatrix<f64>> {
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!(
            "{what}: row {bad} has {} entries, expected {ncols}",
            rows[bad].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// `g` and its Jacobian supplied as Python callables on lists.
///
/// A raised exception is stored and re-raised after the solve; the solver
/// sees a non-finite value and stops.
struct PyResidual {
    g: Py<PyAny>,
    jac: Py<PyAny>,
    n_g: usize,
    n_y: usize,
    error: Arc<Mutex<Option<PyErr>>>,
}

impl PyResidual {
    fn record(&self, e: PyErr) {
        let mut slot = self.error.lock().unwrap();
        if slot.is_none() {
            *slot = Some(e);
        }
    }
}

impl NonlinearResidual for PyResidual {
    fn eval(&self, y: &DVector<f64>) -> DVector<f64> {
        Python::attach(|py| {
            let out = self
                .g
                .call1(py, (y.as_slice().to_vec(),))
                .and_then(|v| v.extract::<Vec<f64>>(py));
            match out {
                Ok(v) => DVector::from_vec(v),
                Err(e) => {
                    self.record(e);
                    DVector::from_element(self.n_g, f64::NAN)
                }
            }
        })
    }

    fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        Python::attach(|py| {
            let out = self
                .jac
                .call1(py, (y.as_slice().to_vec(),))
                .and_then(|v| v.extract::<Vec<Vec<f64>>>(py))
                .and_then(|rows| matrix(rows, self.n_y, "jacobian"));
            match out {
                Ok(m) => m,
                Err(e) => {
                    self.record(e);
                    DMatrix::from_element(self.n_g, self.n_y, f64::NAN)
                }
            }
        })
    }
}

/// Point-to-point OCP description.
#[pyclass(name = "OcpSpec", module = "pyfslp", from_py_object)]
#[derive(Clone)]
struct PyOcpSpec {
    inner: fslp::OcpSpec,
}

#[pymethods]
impl PyOcpSpec {
    /// Base specification of a suite: `pointmass2d`, `pointmass2d-free` or `di1d`.
    #[staticmethod]
    #[pyo3(signature = (suite = "pointmass2d"))]
    fn default(suite: &str) -> PyResult<Self> {
        let suite: Suite = suite.parse().map_err(err)?;
        Ok(Self {
            inner: suite.base_spec(),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: fslp::OcpSpec::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn v_max(&self) -> Option<f64> {
        self.inner.v_max
    }

    /// Continuous-time minimum time of a straight rest-to-rest move.
    fn analytic_min_time(&self) -> PyResult<f64> {
        analytic_min_time(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("OcpSpec(N={}, system={:?})", self.inner.horizon, self.inner.system)
    }
}

/// Solver settings. Unset arguments keep their defaults.
#[pyclass(name = "FslpConfig", module = "pyfslp", from_py_object)]
#[derive(Clone)]
struct PyFslpConfig {
    inner: fslp::FslpConfig,
}

#[pymethods]
impl PyFslpConfig {
    #[new]
    #[pyo3(signature = (acceleration = "none", delta0 = None, sigma_inner = None, max_outer = None, gamma_bound = None))]
    fn new(
        acceleration: &str,
        delta0: Option<f64>,
        sigma_inner: Option<f64>,
        max_outer: Option<usize>,
        gamma_bound: Option<f64>,
    ) -> PyResult<Self> {
        let mut cfg = fslp::FslpConfig::with_acceleration(acceleration.parse().map_err(err)?);
        if let Some(d) = delta0 {
            cfg.delta0 = d;
            cfg.delta_max = cfg.delta_max.max(d);
        }
        if let Some(s) = sigma_inner {
            cfg.inner.sigma_inner = s;
        }
        if let Some(m) = max_outer {
            cfg.max_outer = m;
        }
        if let Some(g) = gamma_bound {
            cfg.gamma_bound = g;
        }
        cfg.validate().map_err(err)?;
        Ok(Self { inner: cfg })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: fslp::FslpConfig::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn acceleration(&self) -> String {
        self.inner.acceleration.to_string()
    }

    #[getter]
    fn delta0(&self) -> f64 {
        self.inner.delta0
    }

    #[getter]
    fn sigma_inner(&self) -> f64 {
        self.inner.inner.sigma_inner
    }

    #[getter]
    fn max_outer(&self) -> usize {
        self.inner.max_outer
    }
}

/// A structured NLP with a feasible starting point.
#[pyclass(name = "Problem", module = "pyfslp", from_py_object)]
#[derive(Clone)]
struct PyProblem {
    inner: ProblemInstance,
    error: Option<Arc<Mutex<Option<PyErr>>>>,
}

impl PyProblem {
    fn take_error(&self) -> Option<PyErr> {
        self.error.as_ref().and_then(|slot| slot.lock().unwrap().take())
    }

    fn vector(&self, w: Vec<f64>) -> PyResult<DVector<f64>> {
        if w.len() != self.inner.nlp.n_w() {
            return Err(PyValueError::new_err(format!(
                "expected {} entries, got {}",
                self.inner.nlp.n_w(),
                w.len()
            )));
        }
        Ok(DVector::from_vec(w))
    }
}

#[pymethods]
impl PyProblem {
    /// Built-in problem: circle, circle-ineq, di1d, pointmass2d, pointmass2d-free.
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: bench::named_problem(name).map_err(err)?,
            error: None,
        })
    }

    /// Transcribes an OCP and initializes it by a constant-control rollout.
    #[staticmethod]
    #[pyo3(signature = (spec, u_const = None, t0 = None))]
    fn from_spec(spec: &PyOcpSpec, u_const: Option<Vec<f64>>, t0: Option<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: bench::ocp_instance("spec", &spec.inner, u_const.as_deref(), t0).map_err(err)?,
            error: None,
        })
    }

    /// `min cost'w  s.t.  C w + g(w[py]) = 0,  A w + b <= 0`.
    ///
    /// `g(y)` returns a list of `n_g` values and `jac(y)` an `n_g x len(py)`
    /// nested list; `n_g` is the row count of `eq_linear`.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    fn custom(
        cost: Vec<f64>,
        eq_linear: Vec<Vec<f64>>,
        ineq_matrix: Vec<Vec<f64>>,
        ineq_offset: Vec<f64>,
        py_indices: Vec<usize>,
        g: Py<PyAny>,
        jac: Py<PyAny>,
        w_init: Vec<f64>,
    ) -> PyResult<Self> {
        let n_w = cost.len();
        let eq = matrix(eq_linear, n_w, "eq_linear")?;
        let ineq = matrix(ineq_matrix, n_w, "ineq_matrix")?;
        let error = Arc::new(Mutex::new(None));
        let residual = PyResidual {
            g,
            jac,
            n_g: eq.nrows(),
            n_y: py_indices.len(),
            error: error.clone(),
        };
        let nlp = fslp::StructuredNlp::new(
            DVector::from_vec(cost),
            eq,
            ineq,
            DVector::from_vec(ineq_offset),
            py_indices,
            Arc::new(residual),
        )
        .map_err(err)?;
        if w_init.len() != n_w {
            return Err(PyValueError::new_err(format!(
                "w_init has {} entries, expected {n_w}",
                w_init.len()
            )));
        }
        Ok(Self {
            inner: ProblemInstance {
                name: "custom".into(),
                nlp,
                w_init: DVector::from_vec(w_init),
                layout: None,
            },
            error: Some(error),
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn n_w(&self) -> usize {
        self.inner.nlp.n_w()
    }

    #[getter]
    fn w_init(&self) -> Vec<f64> {
        self.inner.w_init.as_slice().to_vec()
    }

    fn objective(&self, w: Vec<f64>) -> PyResult<f64> {
        Ok(self.inner.nlp.objective(&self.vector(w)?))
    }

    /// `||C w + g||_inf + ||[A w + b]^+||_inf`.
    fn infeasibility(&self, w: Vec<f64>) -> PyResult<f64> {
        let w = self.vector(w)?;
        let res = infeasibility(&self.inner.nlp, &w, &mut EvalCounters::new());
        match self.take_error() {
            Some(e) => Err(e),
            None => res.map_err(err),
        }
    }

    /// `fully_determined`, `under_determined` or `licq_fails` at a feasible point.
    #[pyo3(signature = (w, tol = 1e-6))]
    fn classify(&self, w: Vec<f64>, tol: f64) -> PyResult<String> {
        let w = self.vector(w)?;
        let res = classify_solution(&self.inner.nlp, &w, tol, &mut EvalCounters::new());
        match self.take_error() {
            Some(e) => Err(e),
            None => res.map(|c| c.to_string()).map_err(err),
        }
    }

    /// Final time of an OCP solution vector.
    fn final_time(&self, w: Vec<f64>) -> PyResult<f64> {
        let w = self.vector(w)?;
        Ok(self.inner.final_time(w.as_slice()))
    }
}

/// Result of one FSLP solve.
#[pyclass(name = "SolveReport", module = "pyfslp", from_py_object)]
#[derive(Clone)]
struct PySolveReport {
    inner: fslp::SolveReport,
}

#[pymethods]
impl PySolveReport {
    #[getter]
    fn status(&self) -> String {
        self.inner.status.to_string()
    }

    #[getter]
    fn is_optimal(&self) -> bool {
        self.inner.is_optimal()
    }

    #[getter]
    fn acceleration(&self) -> String {
        self.inner.acceleration.to_string()
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.inner.objective
    }

    #[getter]
    fn n_outer(&self) -> usize {
        self.inner.n_outer
    }

    #[getter]
    fn n_accepted(&self) -> usize {
        self.inner.n_accepted
    }

    #[getter]
    fn g_evals(&self) -> usize {
        self.inner.counters.g_evals()
    }

    #[getter]
    fn jac_evals(&self) -> usize {
        self.inner.counters.jac_evals()
    }

    #[getter]
    fn lp_solves(&self) -> usize {
        self.inner.counters.lp_solves()
    }

    #[getter]
    fn wall_seconds(&self) -> f64 {
        self.inner.wall_seconds
    }

    #[getter]
    fn w_star(&self) -> Vec<f64> {
        self.inner.w_star.clone()
    }

    /// `|m_k|` per outer iteration.
    fn model_metric(&self) -> Vec<f64> {
        self.inner.model_metric()
    }

    /// Feasibility and projection ratio of every accepted step: `(h, ratio)`.
    fn accepted_steps(&self) -> Vec<(f64, f64)> {
        self.inner
            .outer_trace
            .iter()
            .filter(|r| r.accepted)
            .map(|r| (r.h, r.proj_ratio))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    /// Writes report.json, outer.csv and inner.csv into `out`.
    fn write(&self, out: PathBuf) -> PyResult<()> {
        fslp::export::write_solve_outputs(&self.inner, &out).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(status={}, objective={}, n_outer={}, g_evals={})",
            self.inner.status,
            self.inner.objective,
            self.inner.n_outer,
            self.inner.counters.g_evals()
        )
    }
}

/// Runs FSLP on `problem` from its stored starting point.
#[pyfunction]
#[pyo3(signature = (problem, config = None))]
fn solve(problem: &PyProblem, config: Option<&PyFslpConfig>) -> PyResult<PySolveReport> {
    let cfg = config.map(|c| c.inner.clone()).unwrap_or_default();
    let res = fslp::outer::solve(&problem.inner.nlp, &problem.inner.w_init, &cfg);
    if let Some(e) = problem.take_error() {
        return Err(e);
    }
    Ok(PySolveReport {
        inner: res.map_err(err)?,
    })
}

/// Bounded LP `min c'x s.t. E x = e, A x <= a, lower <= x <= upper`.
#[pyclass(name = "BoxedLp", module = "pyfslp", from_py_object)]
#[derive(Clone)]
struct PyBoxedLp {
    inner: fslp::BoxedLp,
}

#[pymethods]
impl PyBoxedLp {
    #[new]
    #[pyo3(signature = (cost, eq_matrix, eq_rhs, ineq_matrix, ineq_rhs, lower, upper))]
    fn new(
        cost: Vec<f64>,
        eq_matrix: Vec<Vec<f64>>,
        eq_rhs: Vec<f64>,
        ineq_matrix: Vec<Vec<f64>>,
        ineq_rhs: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> PyResult<Self> {
        let n = cost.len();
        let lp = fslp::BoxedLp {
            cost: DVector::from_vec(cost),
            eq_matrix: matrix(eq_matrix, n, "eq_matrix")?,
            eq_rhs: DVector::from_vec(eq_rhs),
            ineq_matrix: matrix(ineq_matrix, n, "ineq_matrix")?,
            ineq_rhs: DVector::from_vec(ineq_rhs),
            lower: DVector::from_vec(lower),
            upper: DVector::from_vec(upper),
        };
        lp.validate().map_err(err)?;
        Ok(Self { inner: lp })
    }

    /// Exact text form with hexadecimal floats.
    #[staticmethod]
    fn from_hex(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: read_hex_dump(text.as_bytes()).map_err(err)?,
        })
    }

    fn to_hex(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        write_hex_dump(&self.inner, &mut buf).map_err(err)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    /// `(status, x, objective)`; `x` is meaningful only for `Optimal`.
    fn solve(&self) -> PyResult<(String, Vec<f64>, f64)> {
        let out = solve_lp(&self.inner, &SimplexOptions::default()).map_err(err)?;
        Ok((
            format!("{:?}", out.status),
            out.solution.as_slice().to_vec(),
            out.objective,
        ))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// `(variant, mean_n_con, mean_n_iter, success_count, problem_count)`
type TableRow = (String, f64, f64, usize, usize);

/// Solves a perturbed suite with every variant and returns the table rows as
/// `(variant, mean_n_con, mean_n_iter, success_count, problem_count)`.
///
/// With `out` set, table.csv, long.csv and manifest.json are written there.
#[pyfunction]
#[pyo3(signature = (suite = "pointmass2d", count = 10, seed = 42, accels = vec!["none".to_string(), "aa5".to_string()], magnitude = bench::DEFAULT_MAGNITUDE, out = None))]
fn run_bench(
    suite: &str,
    count: usize,
    seed: u64,
    accels: Vec<String>,
    magnitude: f64,
    out: Option<PathBuf>,
) -> PyResult<Vec<TableRow>> {
    let accels = accels
        .iter()
        .map(|a| a.parse::<Acceleration>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let mut opts = BenchOptions::new(suite.parse().map_err(err)?, count, seed, accels);
    opts.magnitude = magnitude;
    let outcome = bench::run_bench(&opts).map_err(err)?;
    if let Some(dir) = out {
        bench::write_bench_outputs(&outcome, &dir).map_err(err)?;
    }
    Ok(outcome
        .table
        .iter()
        .map(|r| {
            (
                r.variant.clone(),
                r.mean_n_con,
                r.mean_n_iter,
                r.success_count,
                r.problem_count,
            )
        })
        .collect())
}

#[pymodule]
fn pyfslp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOcpSpec>()?;
    m.add_class::<PyFslpConfig>()?;
    m.add_class::<PyProblem>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyBoxedLp>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    Ok(())
}
