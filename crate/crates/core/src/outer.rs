//! Trust-region FSLP driver.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::anderson::AaConfig;
use crate::error::{check_len, FslpError, Result};
use crate::inner::{self, InnerConfig, InnerStatus, InnerTraceRow};
use crate::lp::{build_lp, solve_lp, SimplexOptions};
use crate::model::{infeasibility, EvalCounters, JacobianSnapshot, StructuredNlp};

/// Trust radius below which the solver gives up.
pub const STALL_RADIUS: f64 = 1e-12;

/// Inner iteration variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Acceleration {
    None,
    Anderson { depth: usize },
}

impl Acceleration {
    /// Column label used in benchmark tables: `FSLP` or `AA(d)`.
    pub fn label(&self) -> String {
        match self {
            Acceleration::None => "FSLP".to_string(),
            Acceleration::Anderson { depth } => format!("AA({depth})"),
        }
    }
}

impl fmt::Display for Acceleration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Acceleration::None => f.write_str("none"),
            Acceleration::Anderson { depth } => write!(f, "aa:{depth}"),
        }
    }
}

impl FromStr for Acceleration {
    type Err = FslpError;

    /// Accepts `none`, `aa1`, `aa5`, `aa15` and `aa:<d>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            FslpError::InvalidConfig(format!(
                "unknown acceleration '{s}' (expected none, aa1, aa5, aa15 or aa:<d>)"
            ))
        };
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Acceleration::None);
        }
        let digits = s.strip_prefix("aa:").or_else(|| s.strip_prefix("aa")).ok_or_else(bad)?;
        let depth: usize = digits.parse().map_err(|_| bad())?;
        if depth == 0 {
            return Err(bad());
        }
        Ok(Acceleration::Anderson { depth })
    }
}

impl TryFrom<String> for Acceleration {
    type Error = FslpError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Acceleration> for String {
    fn from(a: Acceleration) -> String {
        a.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FslpConfig {
    pub delta0: f64,
    pub delta_max: f64,
    pub shrink: f64,
    pub expand: f64,
    pub accept_rho: f64,
    pub good_rho: f64,
    pub model_tol: f64,
    pub max_outer: usize,
    pub acceleration: Acceleration,
    pub inner: InnerConfig,
    pub gamma_bound: f64,
    pub ls_rank_tol: f64,
    pub clip_py_only: bool,
}

impl Default for FslpConfig {
    fn default() -> Self {
        let aa = AaConfig::default();
        Self {
            delta0: 0.25,
            delta_max: 4.0,
            shrink: 0.5,
            expand: 2.0,
            accept_rho: 1e-4,
            good_rho: 0.75,
            model_tol: 1e-9,
            max_outer: 200,
            acceleration: Acceleration::None,
            inner: InnerConfig::default(),
            gamma_bound: aa.gamma_bound,
            ls_rank_tol: aa.ls_rank_tol,
            clip_py_only: aa.clip_py_only,
        }
    }
}

impl FslpConfig {
    pub fn with_acceleration(acceleration: Acceleration) -> Self {
        Self {
            acceleration,
            ..Self::default()
        }
    }

    /// Parses and validates; missing fields take their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FslpError::InvalidConfig(msg));
        if !(self.shrink > 0.0 && self.shrink < 1.0 && self.expand > 1.0) {
            return bad(format!(
                "need 0 < shrink < 1 < expand, got shrink {} expand {}",
                self.shrink, self.expand
            ));
        }
        if !(self.accept_rho > 0.0 && self.accept_rho < self.good_rho && self.good_rho < 1.0) {
            return bad(format!(
                "need 0 < accept_rho < good_rho < 1, got {} and {}",
                self.accept_rho, self.good_rho
            ));
        }
        if !(self.delta0 > 0.0 && self.delta0 <= self.delta_max && self.delta_max.is_finite()) {
            return bad(format!(
                "need 0 < delta0 <= delta_max, got {} and {}",
                self.delta0, self.delta_max
            ));
        }
        if !(self.model_tol >= 0.0) {
            return bad(format!("model_tol must be nonnegative, got {}", self.model_tol));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1".into());
        }
        self.inner.validate()?;
        if let Some(aa) = self.aa_config() {
            aa.validate()?;
        }
        Ok(())
    }

    /// Anderson settings for the configured depth, if accelerated.
    pub fn aa_config(&self) -> Option<AaConfig> {
        match self.acceleration {
            Acceleration::None => None,
            Acceleration::Anderson { depth } => Some(AaConfig {
                depth,
                gamma_bound: self.gamma_bound,
                ls_rank_tol: self.ls_rank_tol,
                clip_py_only: self.clip_py_only,
                inner: self.inner,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    InitInfeasible,
    Stalled,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::MaxIter => "MaxIter",
            SolveStatus::InitInfeasible => "InitInfeasible",
            SolveStatus::Stalled => "Stalled",
        };
        f.write_str(s)
    }
}

/// One trust-region LP solve.
///
/// `objective` and `h` describe the inner-loop result when it converged and
/// the current iterate otherwise. `inner_status` is `None` on the terminating
/// row and when the LP itself failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterTraceRow {
    pub k: usize,
    pub objective: f64,
    pub h: f64,
    pub delta: f64,
    pub model_decrease: f64,
    pub inner_status: Option<InnerStatus>,
    pub inner_iters: usize,
    pub accepted: bool,
    pub rho: f64,
    pub proj_ratio: f64,
}

/// Inner trace row tagged with the outer iteration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerTraceEntry {
    pub outer_iter: usize,
    #[serde(flatten)]
    pub row: InnerTraceRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub acceleration: Acceleration,
    pub objective: f64,
    pub n_outer: usize,
    pub n_accepted: usize,
    pub counters: EvalCounters,
    pub wall_seconds: f64,
    pub w_star: Vec<f64>,
    pub outer_trace: Vec<OuterTraceRow>,
    #[serde(skip)]
    pub inner_trace: Vec<InnerTraceEntry>,
    /// `w_init` followed by every accepted iterate.
    #[serde(skip)]
    pub accepted_iterates: Vec<DVector<f64>>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn w_star(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.w_star)
    }

    /// `|m_k|` per outer row.
    pub fn model_metric(&self) -> Vec<f64> {
        self.outer_trace.iter().map(|r| r.model_decrease.abs()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Radius update after a converged inner loop.
pub fn trust_region_update(rho: f64, delta: f64, boundary_hit: bool, cfg: &FslpConfig) -> f64 {
    if !(rho >= cfg.accept_rho) {
        cfg.shrink * delta
    } else if rho >= cfg.good_rho && boundary_hit {
        (cfg.expand * delta).min(cfg.delta_max)
    } else {
        delta
    }
}

/// Runs FSLP from `w_init`.
pub fn solve(nlp: &StructuredNlp, w_init: &DVector<f64>, cfg: &FslpConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check_len("w_init", nlp.n_w(), w_init.len())?;
    let start = Instant::now();
    let aa = cfg.aa_config();
    let mut counters = EvalCounters::new();
    let mut report = SolveReport {
        status: SolveStatus::InitInfeasible,
        acceleration: cfg.acceleration,
        objective: nlp.objective(w_init),
        n_outer: 0,
        n_accepted: 0,
        counters: EvalCounters::new(),
        wall_seconds: 0.0,
        w_star: w_init.iter().copied().collect(),
        outer_trace: Vec::new(),
        inner_trace: Vec::new(),
        accepted_iterates: vec![w_init.clone()],
    };

    let mut h_hat = infeasibility(nlp, w_init, &mut counters)?;
    if !(h_hat <= cfg.inner.sigma_inner) {
        report.counters = counters;
        report.wall_seconds = start.elapsed().as_secs_f64();
        return Ok(report);
    }

    let c = nlp.cost();
    let mut w_hat = w_init.clone();
    let mut delta = cfg.delta0;
    let mut snapshot: Option<JacobianSnapshot> = None;
    let status = loop {
        if report.outer_trace.len() >= cfg.max_outer {
            break SolveStatus::MaxIter;
        }
        if delta < STALL_RADIUS {
            break SolveStatus::Stalled;
        }
        let k = report.outer_trace.len();
        let snap = match &snapshot {
            Some(s) => s,
            None => snapshot.insert(JacobianSnapshot::new(nlp, &w_hat, &mut counters)?),
        };
        let obj_hat = c.dot(&w_hat);
        let mut row = OuterTraceRow {
            k,
            objective: obj_hat,
            h: h_hat,
            delta,
            model_decrease: 0.0,
            inner_status: None,
            inner_iters: 0,
            accepted: false,
            rho: f64::NAN,
            proj_ratio: f64::NAN,
        };

        let lp = build_lp(nlp, snap, delta)?;
        let outcome = solve_lp(&lp, &SimplexOptions::default())?;
        counters.record_lp_solve();
        if !outcome.is_optimal() {
            report.outer_trace.push(row);
            delta *= cfg.shrink;
            continue;
        }
        let w_bar = outcome.solution;
        let m = c.dot(&(&w_bar - &w_hat));
        row.model_decrease = m;
        if m >= -cfg.model_tol {
            report.outer_trace.push(row);
            break SolveStatus::Optimal;
        }

        let res = inner::run(nlp, &w_hat, &w_bar, snap, delta, &cfg.inner, aa.as_ref(), &mut counters)?;
        report.inner_trace.extend(
            res.trace
                .iter()
                .cloned()
                .map(|row| InnerTraceEntry { outer_iter: k, row }),
        );
        row.inner_status = Some(res.status);
        row.inner_iters = res.iterations();
        row.proj_ratio = res.projection_ratio;
        let Some(w_tilde) = res.w_tilde else {
            report.outer_trace.push(row);
            delta *= cfg.shrink;
            continue;
        };
        let h_tilde = res.trace.last().map_or(f64::NAN, |r| r.h);
        let rho = (obj_hat - c.dot(&w_tilde)) / (-m);
        let boundary_hit = nlp
            .py_indices()
            .iter()
            .map(|&i| (w_bar[i] - w_hat[i]).abs())
            .fold(0.0_f64, f64::max)
            >= 0.999 * delta;
        row.rho = rho;
        row.objective = c.dot(&w_tilde);
        row.h = h_tilde;
        row.accepted = rho >= cfg.accept_rho;
        delta = trust_region_update(rho, delta, boundary_hit, cfg);
        if row.accepted {
            w_hat = w_tilde;
            h_hat = h_tilde;
            snapshot = None;
            report.n_accepted += 1;
            report.accepted_iterates.push(w_hat.clone());
        }
        report.outer_trace.push(row);
    };

    report.status = status;
    report.objective = c.dot(&w_hat);
    report.n_outer = report.outer_trace.len();
    report.w_star = w_hat.iter().copied().collect();
    report.counters = counters;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
