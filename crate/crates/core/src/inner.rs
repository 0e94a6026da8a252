//! Zero-order feasibility iterations.
//!
//! Starting from the LP step `w_bar`, each iteration evaluates `g` once,
//! forms the mismatch `delta` against the frozen Jacobian and solves the
//! shifted LP again. The loop stops once the iterate is feasible to
//! `sigma_inner` and close enough to `w_bar` (projection ratio below 1/2).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::anderson::{AaConfig, AndersonMemory};
use crate::error::{FslpError, Result};
use crate::linalg::inf_norm;
use crate::lp::{build_plp, solve_lp, SimplexOptions};
use crate::model::{EvalCounters, JacobianSnapshot, StructuredNlp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub sigma_inner: f64,
    pub max_inner: usize,
    /// Consecutive growth steps of `h` that count as divergence.
    pub divergence_window: usize,
    /// `h` grows when `h_next > divergence_growth * h`.
    pub divergence_growth: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            sigma_inner: 1e-6,
            max_inner: 50,
            divergence_window: 2,
            divergence_growth: 1.0,
        }
    }
}

impl InnerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_inner > 0.0 && self.sigma_inner < 1e-5) {
            return Err(FslpError::InvalidConfig(format!(
                "sigma_inner must lie in (0, 1e-5), got {}",
                self.sigma_inner
            )));
        }
        if self.max_inner == 0 {
            return Err(FslpError::InvalidConfig("max_inner must be at least 1".into()));
        }
        if self.divergence_window == 0 {
            return Err(FslpError::InvalidConfig("divergence_window must be at least 1".into()));
        }
        if !(self.divergence_growth > 0.0) {
            return Err(FslpError::InvalidConfig("divergence_growth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InnerStatus {
    Converged,
    Diverged,
    RatioViolated,
    LpFailed,
    IterLimit,
}

impl InnerStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            InnerStatus::Converged => "Converged",
            InnerStatus::Diverged => "Diverged",
            InnerStatus::RatioViolated => "RatioViolated",
            InnerStatus::LpFailed => "LpFailed",
            InnerStatus::IterLimit => "IterLimit",
        }
    }
}

impl std::fmt::Display for InnerStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One loop entry. Distances are Euclidean. The Anderson columns are zero for
/// plain iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerTraceRow {
    pub iter: usize,
    pub h: f64,
    pub dist_to_wbar: f64,
    pub dist_to_what: f64,
    /// `||gamma||_inf` used to produce the next iterate.
    pub gamma_inf_norm: f64,
    pub memory_cols: usize,
    /// Whether the trust-region projection moved the next iterate.
    pub clipped: bool,
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub status: InnerStatus,
    /// The feasible projection; present only when `status` is `Converged`.
    pub w_tilde: Option<DVector<f64>>,
    pub trace: Vec<InnerTraceRow>,
    /// The iterate tested at each loop entry, aligned with `trace`.
    pub iterates: Vec<DVector<f64>>,
    pub g_evals_used: usize,
    pub lp_solves: usize,
    /// `||w_bar - w_l|| / ||w_bar - w_hat||` at the last tested iterate.
    pub projection_ratio: f64,
}

impl InnerResult {
    pub fn converged(&self) -> bool {
        self.status == InnerStatus::Converged
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// `||w_bar - w|| / ||w_bar - w_hat||`, defined as 0 when `w_bar = w_hat`.
pub fn projection_ratio(w: &DVector<f64>, w_bar: &DVector<f64>, w_hat: &DVector<f64>) -> f64 {
    let step = (w_bar - w_hat).norm();
    if step == 0.0 {
        return 0.0;
    }
    (w_bar - w).norm() / step
}

/// Plain feasibility iterations `w_{l+1} = w*_PLP(w_l)` from `w_0 = w_bar`.
pub fn feasibility_iterations(
    nlp: &StructuredNlp,
    w_hat: &DVector<f64>,
    w_bar: &DVector<f64>,
    snapshot: &JacobianSnapshot,
    trust_radius: f64,
    cfg: &InnerConfig,
    counters: &mut EvalCounters,
) -> Result<InnerResult> {
    run(nlp, w_hat, w_bar, snapshot, trust_radius, cfg, None, counters)
}

/// Shared loop for the plain and Anderson variants.
///
/// With `accel = None` the next iterate is the PLP solution. Otherwise the
/// Anderson iteration starts from `w_0 = w_hat, w_1 = w_bar`; only loop
/// entries (`w_1, w_2, ...`) are traced, so trace row `l` of both variants
/// describes the `l`-th tested iterate.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run(
    nlp: &StructuredNlp,
    w_hat: &DVector<f64>,
    w_bar: &DVector<f64>,
    snapshot: &JacobianSnapshot,
    trust_radius: f64,
    cfg: &InnerConfig,
    accel: Option<&AaConfig>,
    counters: &mut EvalCounters,
) -> Result<InnerResult> {
    cfg.validate()?;
    if let Some(aa) = accel {
        aa.validate()?;
    }
    let py = nlp.py_indices();
    let clip_indices: Vec<usize> = match accel {
        Some(aa) if !aa.clip_py_only => (0..nlp.n_w()).collect(),
        _ => py.to_vec(),
    };
    let mut memory = accel.map(|aa| AndersonMemory::new(aa.depth, w_hat.clone(), w_bar - w_hat));

    let mut result = InnerResult {
        status: InnerStatus::IterLimit,
        w_tilde: None,
        trace: Vec::new(),
        iterates: Vec::new(),
        g_evals_used: 0,
        lp_solves: 0,
        projection_ratio: 0.0,
    };
    let mut w = w_bar.clone();
    let mut prev_h = f64::INFINITY;
    let mut growth_run = 0;
    let mut ratio_run = 0;

    for iter in 0.. {
        let g = nlp.eval_g(&w, counters)?;
        result.g_evals_used += 1;
        let h = nlp.infeasibility_with(&w, &g);
        let ratio = projection_ratio(&w, w_bar, w_hat);
        result.projection_ratio = ratio;
        result.trace.push(InnerTraceRow {
            iter,
            h,
            dist_to_wbar: (&w - w_bar).norm(),
            dist_to_what: (&w - w_hat).norm(),
            gamma_inf_norm: 0.0,
            memory_cols: 0,
            clipped: false,
        });
        result.iterates.push(w.clone());

        if h <= cfg.sigma_inner {
            if ratio < 0.5 {
                result.status = InnerStatus::Converged;
                result.w_tilde = Some(w);
                return Ok(result);
            }
            ratio_run += 1;
            if ratio_run >= 2 {
                result.status = InnerStatus::RatioViolated;
                return Ok(result);
            }
        } else {
            ratio_run = 0;
        }

        growth_run = if h > cfg.divergence_growth * prev_h {
            growth_run + 1
        } else {
            0
        };
        prev_h = h;
        let excursion = py.iter().map(|&i| (w[i] - w_hat[i]).abs()).fold(0.0_f64, f64::max);
        if growth_run >= cfg.divergence_window || excursion > 10.0 * trust_radius {
            result.status = InnerStatus::Diverged;
            return Ok(result);
        }
        if iter >= cfg.max_inner {
            result.status = InnerStatus::IterLimit;
            return Ok(result);
        }

        let delta = snapshot.mismatch_with(&w, &g);
        let plp = build_plp(nlp, snapshot, &delta, trust_radius)?;
        let outcome = solve_lp(&plp, &SimplexOptions::default())?;
        counters.record_lp_solve();
        result.lp_solves += 1;
        if !outcome.is_optimal() {
            result.status = InnerStatus::LpFailed;
            return Ok(result);
        }

        w = match (&mut memory, accel) {
            (Some(mem), Some(aa)) => {
                let r_next = &outcome.solution - &w;
                mem.push(&w, &r_next);
                let gamma = crate::anderson::aa_gamma(&r_next, &mem.r_matrix(), aa);
                let (next, clipped) =
                    crate::anderson::aa_update_flagged(&w, &r_next, mem, &gamma, w_hat, trust_radius, &clip_indices);
                let row = result.trace.last_mut().expect("row pushed above");
                row.gamma_inf_norm = if gamma.is_empty() { 0.0 } else { inf_norm(&gamma) };
                row.memory_cols = mem.len();
                row.clipped = clipped;
                next
            }
            _ => outcome.solution,
        };
    }
    unreachable!("the inner loop returns from inside")
}

/// Observed contraction rates `||w_{l+1} - w_ref|| / ||w_l - w_ref||`.
///
/// The pair ending at the last iterate is dropped (its numerator vanishes when
/// `w_ref` is that iterate), as are pairs whose denominator is at most 1e-14.
pub fn contraction_estimate(iterates: &[DVector<f64>], w_ref: &DVector<f64>) -> Result<Vec<f64>> {
    if iterates.len() < 3 {
        return Err(FslpError::TraceTooShort {
            needed: 3,
            got: iterates.len(),
        });
    }
    let errors: Vec<f64> = iterates.iter().map(|w| (w - w_ref).norm()).collect();
    Ok(errors[..errors.len() - 1]
        .windows(2)
        .filter(|p| p[0] > 1e-14)
        .map(|p| p[1] / p[0])
        .collect())
}
