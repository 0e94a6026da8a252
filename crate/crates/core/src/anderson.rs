//! Anderson-accelerated feasibility iterations, AA(d).
//!
//! The fixed-point map is `w -> w*_PLP(w)` with residual `r = w*_PLP(w) - w`.
//! Each step combines the last `d` iterate and residual differences with
//! least-squares weights and projects the result back onto the trust region.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{FslpError, Result};
use crate::inner::{self, InnerConfig, InnerResult};
use crate::linalg::{inf_norm, PivotedQr};
use crate::model::{EvalCounters, JacobianSnapshot, StructuredNlp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AaConfig {
    pub depth: usize,
    /// Weights with `||gamma||_inf` above this bound are replaced by zero.
    /// The value 0 disables acceleration entirely (every step is a plain
    /// fixed-point step).
    pub gamma_bound: f64,
    pub ls_rank_tol: f64,
    /// Project only the trust-region variables (`true`) or every coordinate.
    pub clip_py_only: bool,
    pub inner: InnerConfig,
}

impl Default for AaConfig {
    fn default() -> Self {
        Self {
            depth: 1,
            gamma_bound: 1e4,
            ls_rank_tol: 1e-12,
            clip_py_only: true,
            inner: InnerConfig::default(),
        }
    }
}

impl AaConfig {
    pub fn with_depth(depth: usize) -> Self {
        Self {
            depth,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(FslpError::InvalidConfig("Anderson depth must be at least 1".into()));
        }
        if !(self.gamma_bound > 1.0 || self.gamma_bound == 0.0) {
            return Err(FslpError::InvalidConfig(format!(
                "gamma_bound must exceed 1 (or be 0 to force plain steps), got {}",
                self.gamma_bound
            )));
        }
        if !(self.ls_rank_tol >= 0.0 && self.ls_rank_tol < 1.0) {
            return Err(FslpError::InvalidConfig(format!(
                "ls_rank_tol must lie in [0, 1), got {}",
                self.ls_rank_tol
            )));
        }
        self.inner.validate()
    }
}

/// Difference histories, newest column first.
#[derive(Debug, Clone)]
pub struct AndersonMemory {
    depth: usize,
    w_diffs: VecDeque<DVector<f64>>,
    r_diffs: VecDeque<DVector<f64>>,
    last_w: DVector<f64>,
    last_r: DVector<f64>,
}

impl AndersonMemory {
    /// Memory primed with `w_0` and the first residual `r_1 = w_1 - w_0`.
    pub fn new(depth: usize, w0: DVector<f64>, r1: DVector<f64>) -> Self {
        Self {
            depth,
            w_diffs: VecDeque::with_capacity(depth + 1),
            r_diffs: VecDeque::with_capacity(depth + 1),
            last_w: w0,
            last_r: r1,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of stored columns, `min(l, d)` after `l` pushes.
    pub fn len(&self) -> usize {
        self.r_diffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_diffs.is_empty()
    }

    /// Records `w_l - w_{l-1}` and `r_{l+1} - r_l`, dropping the oldest pair
    /// beyond depth `d`.
    pub fn push(&mut self, w_l: &DVector<f64>, r_next: &DVector<f64>) {
        self.w_diffs.push_front(w_l - &self.last_w);
        self.r_diffs.push_front(r_next - &self.last_r);
        self.w_diffs.truncate(self.depth);
        self.r_diffs.truncate(self.depth);
        self.last_w = w_l.clone();
        self.last_r = r_next.clone();
    }

    /// `F_l`, residual differences.
    pub fn r_matrix(&self) -> DMatrix<f64> {
        Self::stack(&self.r_diffs, self.last_r.len())
    }

    /// `E_l`, iterate differences.
    pub fn w_matrix(&self) -> DMatrix<f64> {
        Self::stack(&self.w_diffs, self.last_w.len())
    }

    fn stack(cols: &VecDeque<DVector<f64>>, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            m.set_column(j, c);
        }
        m
    }
}

/// `argmin ||r_next - F gamma||_2` via pivoted QR; dependent columns get
/// weight 0. Returns zeros when the minimizer exceeds `gamma_bound`.
pub fn aa_gamma(r_next: &DVector<f64>, f: &DMatrix<f64>, cfg: &AaConfig) -> DVector<f64> {
    if f.ncols() == 0 {
        return DVector::zeros(0);
    }
    let gamma = PivotedQr::new(f, cfg.ls_rank_tol).solve_basic(r_next);
    if inf_norm(&gamma) > cfg.gamma_bound || gamma.iter().any(|g| !g.is_finite()) {
        return DVector::zeros(f.ncols());
    }
    gamma
}

/// Depth-one weight `<r_next, r_next - r_prev> / ||r_next - r_prev||^2`, or 0
/// when the residual did not move.
pub fn aa_gamma_d1(r_next: &DVector<f64>, r_prev: &DVector<f64>) -> f64 {
    let diff = r_next - r_prev;
    let n = diff.norm();
    if n <= 1e-14 {
        return 0.0;
    }
    r_next.dot(&diff) / (n * n)
}

/// `clip(w_l + r_next - (E + F) gamma)` where the box `|w_i - w_hat_i| <= radius`
/// is applied on `clip_indices` only.
pub fn aa_update(
    w_l: &DVector<f64>,
    r_next: &DVector<f64>,
    memory: &AndersonMemory,
    gamma: &DVector<f64>,
    w_hat: &DVector<f64>,
    trust_radius: f64,
    clip_indices: &[usize],
) -> DVector<f64> {
    aa_update_flagged(w_l, r_next, memory, gamma, w_hat, trust_radius, clip_indices).0
}

/// [`aa_update`] that also reports whether the projection changed anything.
pub(crate) fn aa_update_flagged(
    w_l: &DVector<f64>,
    r_next: &DVector<f64>,
    memory: &AndersonMemory,
    gamma: &DVector<f64>,
    w_hat: &DVector<f64>,
    trust_radius: f64,
    clip_indices: &[usize],
) -> (DVector<f64>, bool) {
    let mut w = w_l + r_next;
    for (j, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            w.axpy(-g, &memory.w_diffs[j], 1.0);
            w.axpy(-g, &memory.r_diffs[j], 1.0);
        }
    }
    let mut clipped = false;
    for &i in clip_indices {
        let lo = w_hat[i] - trust_radius;
        let hi = w_hat[i] + trust_radius;
        let v = w[i].clamp(lo, hi);
        if v != w[i] {
            clipped = true;
            w[i] = v;
        }
    }
    (w, clipped)
}

/// AA(d) feasibility iterations from `w_0 = w_hat`, `w_1 = w_bar`.
///
/// Uses `cfg.inner` for the stopping test, iteration cap and divergence rule.
/// Trace row `l` describes `w_{l+1}`.
pub fn aa_feasibility_iterations(
    nlp: &StructuredNlp,
    w_hat: &DVector<f64>,
    w_bar: &DVector<f64>,
    snapshot: &JacobianSnapshot,
    trust_radius: f64,
    cfg: &AaConfig,
    counters: &mut EvalCounters,
) -> Result<InnerResult> {
    inner::run(
        nlp,
        w_hat,
        w_bar,
        snapshot,
        trust_radius,
        &cfg.inner,
        Some(cfg),
        counters,
    )
}
