//! Trust-region LPs and their solution.
//!
//! [`build_plp`] assembles the parametric LP around a linearization point and
//! [`solve_lp`] solves any [`BoxedLp`] with a dense two-phase simplex.

mod dump;
mod hexfloat;
mod simplex;

pub use dump::{read_hex_dump, write_hex_dump};
pub use hexfloat::{format_hex, parse_hex};
pub use simplex::{solve_lp, SimplexOptions};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{check_len, FslpError, Result};
use crate::model::{JacobianSnapshot, StructuredNlp};

/// `min cost'w s.t. eq_matrix w = eq_rhs, ineq_matrix w <= ineq_rhs, lower <= w <= upper`.
///
/// Bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxedLp {
    pub cost: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl BoxedLp {
    pub fn n_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn n_eq(&self) -> usize {
        self.eq_matrix.nrows()
    }

    pub fn n_ineq(&self) -> usize {
        self.ineq_matrix.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        check_len("LP equality columns", n, self.eq_matrix.ncols())?;
        check_len("LP equality rhs", self.eq_matrix.nrows(), self.eq_rhs.len())?;
        check_len("LP inequality columns", n, self.ineq_matrix.ncols())?;
        check_len("LP inequality rhs", self.ineq_matrix.nrows(), self.ineq_rhs.len())?;
        check_len("LP lower bounds", n, self.lower.len())?;
        check_len("LP upper bounds", n, self.upper.len())?;
        let data_finite = self.cost.iter().all(|x| x.is_finite())
            && self.eq_matrix.iter().all(|x| x.is_finite())
            && self.eq_rhs.iter().all(|x| x.is_finite())
            && self.ineq_matrix.iter().all(|x| x.is_finite())
            && self.ineq_rhs.iter().all(|x| x.is_finite());
        if !data_finite {
            return Err(FslpError::InvalidProblem("non-finite LP data".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(FslpError::InvalidProblem(format!(
                    "bad bounds [{lo}, {hi}] on variable {j}"
                )));
            }
        }
        Ok(())
    }

    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        self.cost.dot(w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Basic solution; meaningful only when `status` is `Optimal`.
    pub solution: DVector<f64>,
    pub objective: f64,
    pub pivot_count: usize,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Parametric LP around the snapshot point `w_hat`:
///
/// ```text
///   min c'w
///   s.t. delta + C w + g(P_y w_hat) + G'(w - w_hat) = 0
///        A w + b <= 0
///        |w_i - w_hat_i| <= radius   for i in P_y
/// ```
///
/// With `delta = 0` this is the trust-region LP at `w_hat`.
pub fn build_plp(
    nlp: &StructuredNlp,
    snapshot: &JacobianSnapshot,
    delta: &DVector<f64>,
    trust_radius: f64,
) -> Result<BoxedLp> {
    check_len("delta", nlp.n_g(), delta.len())?;
    check_len("snapshot point", nlp.n_w(), snapshot.point().len())?;
    if !(trust_radius > 0.0) {
        return Err(FslpError::Precondition(format!(
            "trust radius must be positive, got {trust_radius}"
        )));
    }
    let w_hat = snapshot.point();
    let jac = snapshot.jacobian();
    let eq_matrix = nlp.eq_linear() + jac;
    let eq_rhs = jac * w_hat - snapshot.g_value() - delta;

    let n = nlp.n_w();
    let mut lower = DVector::from_element(n, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(n, f64::INFINITY);
    for &i in nlp.py_indices() {
        lower[i] = w_hat[i] - trust_radius;
        upper[i] = w_hat[i] + trust_radius;
    }

    Ok(BoxedLp {
        cost: nlp.cost().clone(),
        eq_matrix,
        eq_rhs,
        ineq_matrix: nlp.ineq_matrix().clone(),
        ineq_rhs: -nlp.ineq_offset(),
        lower,
        upper,
    })
}

/// Trust-region LP at the snapshot point.
pub fn build_lp(nlp: &StructuredNlp, snapshot: &JacobianSnapshot, trust_radius: f64) -> Result<BoxedLp> {
    build_plp(nlp, snapshot, &DVector::zeros(nlp.n_g()), trust_radius)
}
