//! The structured NLP `min c'w s.t. C w + g(P_y w) = 0, A w + b <= 0`.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, FslpError, Result};
use crate::linalg::{inf_norm, numerical_rank};

/// Relative tolerance of every rank decision in this crate.
pub const RANK_TOL: f64 = 1e-10;

/// Default absolute tolerance for active inequality rows.
pub const ACTIVE_TOL: f64 = 1e-8;

/// The nonlinear block `g: R^{n_y} -> R^{n_g}` and its Jacobian.
pub trait NonlinearResidual: Send + Sync {
    fn eval(&self, y: &DVector<f64>) -> DVector<f64>;

    /// `n_g x n_y` Jacobian at `y`.
    fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64>;
}

/// Adapter turning a pair of closures into a [`NonlinearResidual`].
pub struct FnResidual<F, J> {
    eval: F,
    jacobian: J,
}

impl<F, J> FnResidual<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    pub fn new(eval: F, jacobian: J) -> Self {
        Self { eval, jacobian }
    }
}

impl<F, J> NonlinearResidual for FnResidual<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    fn eval(&self, y: &DVector<f64>) -> DVector<f64> {
        (self.eval)(y)
    }

    fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        (self.jacobian)(y)
    }
}

/// Evaluation counters for one solve. Incremented once per callback invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalCounters {
    n_g_evals: usize,
    n_jac_evals: usize,
    n_lp_solves: usize,
}

impl EvalCounters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn g_evals(&self) -> usize {
        self.n_g_evals
    }

    pub fn jac_evals(&self) -> usize {
        self.n_jac_evals
    }

    pub fn lp_solves(&self) -> usize {
        self.n_lp_solves
    }

    pub(crate) fn record_lp_solve(&mut self) {
        self.n_lp_solves += 1;
    }
}

/// Rank diagnostics of the inequality matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InequalityRank {
    pub rows: usize,
    /// Rows left after merging each pair of opposite rows (`a` and `-s a`)
    /// into one two-sided constraint.
    pub distinct_rows: usize,
    pub rank: usize,
}

impl InequalityRank {
    pub fn is_full(&self) -> bool {
        self.rank == self.distinct_rows
    }
}

/// Problem data of `min c'w s.t. C w + g(P_y w) = 0, A w + b <= 0`.
///
/// Immutable after construction; cloning shares the residual callback.
#[derive(Clone)]
pub struct StructuredNlp {
    c: DVector<f64>,
    eq_linear: DMatrix<f64>,
    ineq_matrix: DMatrix<f64>,
    ineq_offset: DVector<f64>,
    py_indices: Vec<usize>,
    residual: Arc<dyn NonlinearResidual>,
}

impl fmt::Debug for StructuredNlp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StructuredNlp")
            .field("n_w", &self.n_w())
            .field("n_g", &self.n_g())
            .field("n_b", &self.n_b())
            .field("n_y", &self.n_y())
            .finish()
    }
}

impl StructuredNlp {
    /// Validates dimensions, finiteness and the selection indices.
    ///
    /// `eq_linear` fixes `n_g` and `ineq_matrix` fixes `n_b`; the residual must
    /// return vectors of length `n_g`.
    pub fn new(
        c: DVector<f64>,
        eq_linear: DMatrix<f64>,
        ineq_matrix: DMatrix<f64>,
        ineq_offset: DVector<f64>,
        py_indices: Vec<usize>,
        residual: Arc<dyn NonlinearResidual>,
    ) -> Result<Self> {
        let n_w = c.len();
        check_len("C columns", n_w, eq_linear.ncols())?;
        check_len("A columns", n_w, ineq_matrix.ncols())?;
        check_len("b length", ineq_matrix.nrows(), ineq_offset.len())?;
        if py_indices.len() > n_w {
            return Err(FslpError::InvalidProblem(format!(
                "{} selected variables but only {} variables",
                py_indices.len(),
                n_w
            )));
        }
        let mut seen = HashSet::with_capacity(py_indices.len());
        for &i in &py_indices {
            if i >= n_w {
                return Err(FslpError::InvalidProblem(format!(
                    "selection index {i} out of range 0..{n_w}"
                )));
            }
            if !seen.insert(i) {
                return Err(FslpError::InvalidProblem(format!("selection index {i} appears twice")));
            }
        }
        let finite = c.iter().all(|x| x.is_finite())
            && eq_linear.iter().all(|x| x.is_finite())
            && ineq_matrix.iter().all(|x| x.is_finite())
            && ineq_offset.iter().all(|x| x.is_finite());
        if !finite {
            return Err(FslpError::InvalidProblem("non-finite problem data".into()));
        }
        Ok(Self {
            c,
            eq_linear,
            ineq_matrix,
            ineq_offset,
            py_indices,
            residual,
        })
    }

    pub fn n_w(&self) -> usize {
        self.c.len()
    }

    pub fn n_g(&self) -> usize {
        self.eq_linear.nrows()
    }

    pub fn n_b(&self) -> usize {
        self.ineq_matrix.nrows()
    }

    pub fn n_y(&self) -> usize {
        self.py_indices.len()
    }

    pub fn cost(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn eq_linear(&self) -> &DMatrix<f64> {
        &self.eq_linear
    }

    pub fn ineq_matrix(&self) -> &DMatrix<f64> {
        &self.ineq_matrix
    }

    pub fn ineq_offset(&self) -> &DVector<f64> {
        &self.ineq_offset
    }

    pub fn py_indices(&self) -> &[usize] {
        &self.py_indices
    }

    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        self.c.dot(w)
    }

    /// `P_y w`.
    pub fn select(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n_y(), self.py_indices.iter().map(|&i| w[i]))
    }

    /// Rank of `A` after folding two-sided rows together.
    pub fn inequality_rank(&self) -> InequalityRank {
        let rows = self.n_b();
        let mut keep: Vec<usize> = Vec::with_capacity(rows);
        for i in 0..rows {
            let row = self.ineq_matrix.row(i);
            let paired = keep.iter().any(|&j| {
                let other = self.ineq_matrix.row(j);
                let scale = row.norm() / other.norm().max(f64::MIN_POSITIVE);
                (row + other * scale).norm() <= 1e-12 * row.norm().max(1.0)
            });
            if !paired {
                keep.push(i);
            }
        }
        let distinct = DMatrix::from_fn(keep.len(), self.n_w(), |r, c| self.ineq_matrix[(keep[r], c)]);
        InequalityRank {
            rows,
            distinct_rows: keep.len(),
            rank: numerical_rank(&distinct, RANK_TOL),
        }
    }

    /// Fails unless `A` has full row rank (two-sided rows counted once).
    pub fn ensure_full_row_rank(&self) -> Result<()> {
        let report = self.inequality_rank();
        if !report.is_full() {
            return Err(FslpError::InvalidProblem(format!(
                "inequality matrix has rank {} with {} distinct rows",
                report.rank, report.distinct_rows
            )));
        }
        Ok(())
    }

    /// `g(P_y w)`, counted as one evaluation.
    pub fn eval_g(&self, w: &DVector<f64>, counters: &mut EvalCounters) -> Result<DVector<f64>> {
        check_len("w", self.n_w(), w.len())?;
        let y = self.select(w);
        counters.n_g_evals += 1;
        let out = self.residual.eval(&y);
        check_len("g output", self.n_g(), out.len())?;
        if let Some(index) = out.iter().position(|x| !x.is_finite()) {
            return Err(FslpError::NonFiniteEvaluation { index });
        }
        Ok(out)
    }

    /// `grad g(P_y w)' P_y` expanded to `n_g x n_w`, counted as one Jacobian evaluation.
    pub fn eval_jacobian(&self, w: &DVector<f64>, counters: &mut EvalCounters) -> Result<DMatrix<f64>> {
        check_len("w", self.n_w(), w.len())?;
        let y = self.select(w);
        counters.n_jac_evals += 1;
        let jac_y = self.residual.jacobian(&y);
        if jac_y.shape() != (self.n_g(), self.n_y()) {
            return Err(FslpError::Dimension {
                context: "g Jacobian",
                expected: self.n_g() * self.n_y(),
                found: jac_y.nrows() * jac_y.ncols(),
            });
        }
        if let Some(index) = jac_y.iter().position(|x| !x.is_finite()) {
            return Err(FslpError::NonFiniteEvaluation { index });
        }
        let mut full = DMatrix::zeros(self.n_g(), self.n_w());
        for (k, &col) in self.py_indices.iter().enumerate() {
            full.set_column(col, &jac_y.column(k));
        }
        Ok(full)
    }

    /// `||C w + g||_inf + ||[A w + b]^+||_inf` for an already evaluated `g = g(P_y w)`.
    pub fn infeasibility_with(&self, w: &DVector<f64>, g_value: &DVector<f64>) -> f64 {
        let eq = &self.eq_linear * w + g_value;
        inf_norm(&eq) + self.inequality_violation(w)
    }

    /// `||[A w + b]^+||_inf`.
    pub fn inequality_violation(&self, w: &DVector<f64>) -> f64 {
        if self.n_b() == 0 {
            return 0.0;
        }
        let lin = &self.ineq_matrix * w + &self.ineq_offset;
        lin.iter().fold(0.0_f64, |acc, &v| acc.max(v))
    }
}

/// `C w + g(P_y w)`.
pub fn eval_equality_residual(
    nlp: &StructuredNlp,
    w: &DVector<f64>,
    counters: &mut EvalCounters,
) -> Result<DVector<f64>> {
    let g = nlp.eval_g(w, counters)?;
    Ok(nlp.eq_linear() * w + g)
}

/// Infeasibility measure `h(w)`.
pub fn infeasibility(nlp: &StructuredNlp, w: &DVector<f64>, counters: &mut EvalCounters) -> Result<f64> {
    let g = nlp.eval_g(w, counters)?;
    Ok(nlp.infeasibility_with(w, &g))
}

/// Indices `i` with `|A_i w + b_i| <= tol`.
pub fn active_set(nlp: &StructuredNlp, w: &DVector<f64>, tol: f64) -> Vec<usize> {
    if nlp.n_b() == 0 {
        return Vec::new();
    }
    let lin = nlp.ineq_matrix() * w + nlp.ineq_offset();
    lin.iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Jacobian of `g(P_y .)` frozen at a linearization point, together with the
/// value of `g` there.
#[derive(Debug, Clone)]
pub struct JacobianSnapshot {
    jacobian: DMatrix<f64>,
    g_value: DVector<f64>,
    point: DVector<f64>,
}

impl JacobianSnapshot {
    /// Costs one `g` and one Jacobian evaluation.
    pub fn new(nlp: &StructuredNlp, w_hat: &DVector<f64>, counters: &mut EvalCounters) -> Result<Self> {
        let g_value = nlp.eval_g(w_hat, counters)?;
        let jacobian = nlp.eval_jacobian(w_hat, counters)?;
        Ok(Self {
            jacobian,
            g_value,
            point: w_hat.clone(),
        })
    }

    /// Full-width `n_g x n_w` Jacobian; zero outside the selected columns.
    pub fn jacobian(&self) -> &DMatrix<f64> {
        &self.jacobian
    }

    pub fn g_value(&self) -> &DVector<f64> {
        &self.g_value
    }

    pub fn point(&self) -> &DVector<f64> {
        &self.point
    }

    /// `delta = g_l - g(P_y w_hat) - G'(w_l - w_hat)` for an already evaluated `g_l`.
    pub fn mismatch_with(&self, w_l: &DVector<f64>, g_l: &DVector<f64>) -> DVector<f64> {
        let step = w_l - &self.point;
        g_l - &self.g_value - &self.jacobian * step
    }
}

/// Zero-order mismatch `delta(w_l, w_hat)`; one `g` evaluation.
pub fn zero_order_mismatch(
    nlp: &StructuredNlp,
    w_l: &DVector<f64>,
    snapshot: &JacobianSnapshot,
    counters: &mut EvalCounters,
) -> Result<DVector<f64>> {
    let g_l = nlp.eval_g(w_l, counters)?;
    Ok(snapshot.mismatch_with(w_l, &g_l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    FullyDetermined,
    UnderDetermined,
    LicqFails,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Classification::FullyDetermined => "fully_determined",
            Classification::UnderDetermined => "under_determined",
            Classification::LicqFails => "licq_fails",
        };
        f.write_str(s)
    }
}

/// Classifies a feasible point by counting equality rows plus active
/// inequality rows against `n_w` and checking linear independence of their
/// gradients.
pub fn classify_solution(
    nlp: &StructuredNlp,
    w_star: &DVector<f64>,
    tol: f64,
    counters: &mut EvalCounters,
) -> Result<Classification> {
    let h = infeasibility(nlp, w_star, counters)?;
    if h > tol {
        return Err(FslpError::Precondition(format!(
            "classification needs a feasible point, h = {h:e} > {tol:e}"
        )));
    }
    let jac = nlp.eval_jacobian(w_star, counters)?;
    let active = active_set(nlp, w_star, tol);
    let rows = nlp.n_g() + active.len();
    let n_w = nlp.n_w();

    let mut stacked = DMatrix::zeros(rows, n_w);
    let eq_rows = nlp.eq_linear() + jac;
    stacked.rows_mut(0, nlp.n_g()).copy_from(&eq_rows);
    for (k, &i) in active.iter().enumerate() {
        stacked.row_mut(nlp.n_g() + k).copy_from(&nlp.ineq_matrix().row(i));
    }
    let full_rank = numerical_rank(&stacked, RANK_TOL) == rows;

    Ok(match (rows.cmp(&n_w), full_rank) {
        (std::cmp::Ordering::Equal, true) => Classification::FullyDetermined,
        (std::cmp::Ordering::Less, true) => Classification::UnderDetermined,
        _ => Classification::LicqFails,
    })
}
