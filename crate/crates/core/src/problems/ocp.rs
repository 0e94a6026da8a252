//! Time-optimal point-to-point problems, transcribed with RK4 multiple shooting
//! into the structured NLP form.
//!
//! Decision vector layout (the first `n_y` entries are exactly the variables
//! that enter `g` nonlinearly):
//!
//! ```text
//! [ x_0 .. x_N | u_0 .. u_{N-1} | T | n_0 .. n_{N-1} | s_0 | s_N | s_vel | s_u | s_obs ]
//! ```
//!
//! `n_k = (n_a, n_b)` are the per-stage separating hyperplanes (present only
//! with an obstacle); the trailing slacks are present only for the stage
//! constraints that are configured.

use std::ops::Range;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dynamics::{rk4_next, rk4_step, MultiIntegrator};
use crate::error::{FslpError, Result};
use crate::model::{NonlinearResidual, StructuredNlp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SystemKind {
    /// `p'' = u`, state `(p, v)`.
    DoubleIntegrator1D,
    /// `p'' = u` in the plane, state `(p_x, p_y, v_x, v_y)`.
    PointMass2D,
}

impl SystemKind {
    pub fn dim(self) -> usize {
        match self {
            SystemKind::DoubleIntegrator1D => 1,
            SystemKind::PointMass2D => 2,
        }
    }

    pub fn nx(self) -> usize {
        2 * self.dim()
    }

    pub fn nu(self) -> usize {
        self.dim()
    }
}

/// Convex polygonal obstacle with a safety margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub vertices: Vec<[f64; 2]>,
    pub r_safe: f64,
}

impl Obstacle {
    /// Axis-aligned square.
    pub fn square(center: [f64; 2], side: f64, r_safe: f64) -> Self {
        let h = side / 2.0;
        let [cx, cy] = center;
        Self {
            vertices: vec![[cx - h, cy - h], [cx + h, cy - h], [cx + h, cy + h], [cx - h, cy + h]],
            r_safe,
        }
    }

    fn orientation(&self) -> f64 {
        let v = &self.vertices;
        let mut area = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            area += v[i][0] * v[j][1] - v[j][0] * v[i][1];
        }
        area.signum()
    }

    fn is_convex(&self) -> bool {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return false;
        }
        let orient = self.orientation();
        if orient == 0.0 {
            return false;
        }
        (0..n).all(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            let c = v[(i + 2) % n];
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            cross * orient > 0.0
        })
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        let v = &self.vertices;
        let orient = self.orientation();
        (0..v.len()).all(|i| {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            cross * orient >= 0.0
        })
    }

    fn closest_point(&self, p: [f64; 2]) -> [f64; 2] {
        let v = &self.vertices;
        let mut best = v[0];
        let mut best_d = f64::INFINITY;
        for i in 0..v.len() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            let ab = [b[0] - a[0], b[1] - a[1]];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
            let d = (p[0] - q[0]).hypot(p[1] - q[1]);
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    /// Hyperplane `(n_a, n_b)` with `||n||_inf <= 1`, every vertex on the
    /// nonnegative side and `n_a'p + n_b + r_safe <= 0`.
    pub fn separating_hyperplane(&self, p: [f64; 2]) -> Option<[f64; 3]> {
        if self.contains(p) {
            return None;
        }
        let q = self.closest_point(p);
        let dist = (q[0] - p[0]).hypot(q[1] - p[1]);
        if dist == 0.0 {
            return None;
        }
        let d = [(q[0] - p[0]) / dist, (q[1] - p[1]) / dist];
        let offset = -(d[0] * q[0] + d[1] * q[1]);
        let scale = 1.0 / d[0].abs().max(d[1].abs()).max(offset.abs());
        if scale * dist < self.r_safe {
            return None;
        }
        Some([scale * d[0], scale * d[1], scale * offset])
    }
}

/// Time-optimal point-to-point problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpSpec {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub system: SystemKind,
    pub x_start: Vec<f64>,
    pub x_end: Vec<f64>,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub mu0: Vec<f64>,
    #[serde(rename = "muN")]
    pub mu_n: Vec<f64>,
    /// Speed bound `||v|| <= v_max`; planar systems only.
    #[serde(default)]
    pub v_max: Option<f64>,
    /// Control-norm bound `||u|| <= u_ball`.
    #[serde(default)]
    pub u_ball: Option<f64>,
    #[serde(default)]
    pub obstacle: Option<Obstacle>,
    #[serde(rename = "T_bounds")]
    pub t_bounds: (f64, f64),
}

impl OcpSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: OcpSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FslpError::InvalidSpec(msg));
        let nx = self.system.nx();
        let nu = self.system.nu();
        if self.horizon < 2 {
            return bad(format!("N must be at least 2, got {}", self.horizon));
        }
        for (name, v, n) in [
            ("x_start", &self.x_start, nx),
            ("x_end", &self.x_end, nx),
            ("x_min", &self.x_min, nx),
            ("x_max", &self.x_max, nx),
            ("mu0", &self.mu0, nx),
            ("muN", &self.mu_n, nx),
            ("u_min", &self.u_min, nu),
            ("u_max", &self.u_max, nu),
        ] {
            if v.len() != n {
                return bad(format!("{name} must have length {n}, got {}", v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.mu0.iter().chain(&self.mu_n).any(|&m| m <= 0.0) {
            return bad("slack penalties mu0 and muN must be strictly positive".into());
        }
        if (0..nx).any(|i| self.x_min[i] > self.x_max[i]) || (0..nu).any(|i| self.u_min[i] > self.u_max[i]) {
            return bad("lower bounds exceed upper bounds".into());
        }
        for (name, x) in [("x_start", &self.x_start), ("x_end", &self.x_end)] {
            if (0..nx).any(|i| x[i] < self.x_min[i] || x[i] > self.x_max[i]) {
                return bad(format!("{name} lies outside the state box"));
            }
        }
        let (t_min, t_max) = self.t_bounds;
        if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) {
            return bad(format!(
                "T_bounds must satisfy 0 < T_min < T_max, got ({t_min}, {t_max})"
            ));
        }
        if let Some(v) = self.v_max {
            if self.system == SystemKind::DoubleIntegrator1D {
                return bad(
                    "v_max is a linear bound for DoubleIntegrator1D; set the velocity entries of x_min/x_max instead"
                        .into(),
                );
            }
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("v_max must be positive, got {v}"));
            }
        }
        if let Some(r) = self.u_ball {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("u_ball must be positive, got {r}"));
            }
        }
        if let Some(obs) = &self.obstacle {
            if self.system != SystemKind::PointMass2D {
                return bad("obstacles need a planar system".into());
            }
            if !obs.is_convex() {
                return bad("obstacle vertices must form a convex polygon".into());
            }
            if !(obs.r_safe >= 0.0 && obs.r_safe.is_finite()) {
                return bad("r_safe must be nonnegative".into());
            }
        }
        Ok(())
    }
}

/// Index map of the transcribed decision vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OcpLayout {
    pub horizon: usize,
    pub nx: usize,
    pub nu: usize,
    pub dim: usize,
    pub has_speed: bool,
    pub has_control_ball: bool,
    pub has_obstacle: bool,
    u_off: usize,
    t_idx: usize,
    n_off: usize,
    s0_off: usize,
    sn_off: usize,
    svel_off: usize,
    su_off: usize,
    sobs_off: usize,
    n_w: usize,
}

impl OcpLayout {
    pub fn new(spec: &OcpSpec) -> Self {
        let horizon = spec.horizon;
        let nx = spec.system.nx();
        let nu = spec.system.nu();
        let has_speed = spec.v_max.is_some();
        let has_control_ball = spec.u_ball.is_some();
        let has_obstacle = spec.obstacle.is_some();
        let u_off = nx * (horizon + 1);
        let t_idx = u_off + nu * horizon;
        let n_off = t_idx + 1;
        let s0_off = n_off + if has_obstacle { 3 * horizon } else { 0 };
        let sn_off = s0_off + nx;
        let svel_off = sn_off + nx;
        let su_off = svel_off + if has_speed { horizon } else { 0 };
        let sobs_off = su_off + if has_control_ball { horizon } else { 0 };
        let n_w = sobs_off + if has_obstacle { horizon } else { 0 };
        Self {
            horizon,
            nx,
            nu,
            dim: spec.system.dim(),
            has_speed,
            has_control_ball,
            has_obstacle,
            u_off,
            t_idx,
            n_off,
            s0_off,
            sn_off,
            svel_off,
            su_off,
            sobs_off,
            n_w,
        }
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    /// Number of leading variables that enter `g` nonlinearly.
    pub fn n_y(&self) -> usize {
        self.s0_off
    }

    pub fn n_g(&self) -> usize {
        let stages = usize::from(self.has_speed) + usize::from(self.has_control_ball) + usize::from(self.has_obstacle);
        self.horizon * (self.nx + stages)
    }

    pub fn state(&self, k: usize) -> Range<usize> {
        k * self.nx..(k + 1) * self.nx
    }

    pub fn control(&self, k: usize) -> Range<usize> {
        let s = self.u_off + k * self.nu;
        s..s + self.nu
    }

    pub fn time(&self) -> usize {
        self.t_idx
    }

    pub fn hyperplane(&self, k: usize) -> Range<usize> {
        let s = self.n_off + 3 * k;
        s..s + 3
    }

    pub fn start_slack(&self) -> Range<usize> {
        self.s0_off..self.s0_off + self.nx
    }

    pub fn end_slack(&self) -> Range<usize> {
        self.sn_off..self.sn_off + self.nx
    }

    pub fn speed_slack(&self, k: usize) -> usize {
        self.svel_off + k
    }

    pub fn control_slack(&self, k: usize) -> usize {
        self.su_off + k
    }

    pub fn obstacle_slack(&self, k: usize) -> usize {
        self.sobs_off + k
    }

    fn defect_row(&self, k: usize) -> usize {
        k * self.nx
    }

    fn speed_row(&self, k: usize) -> usize {
        self.horizon * self.nx + k
    }

    fn control_row(&self, k: usize) -> usize {
        self.horizon * self.nx + usize::from(self.has_speed) * self.horizon + k
    }

    fn obstacle_row(&self, k: usize) -> usize {
        self.horizon * self.nx + (usize::from(self.has_speed) + usize::from(self.has_control_ball)) * self.horizon + k
    }

    fn position(&self, k: usize) -> Range<usize> {
        let s = k * self.nx;
        s..s + self.dim
    }

    fn velocity(&self, k: usize) -> Range<usize> {
        let s = k * self.nx + self.dim;
        s..s + self.dim
    }
}

/// Result of [`build_p2p_ocp`]: the NLP plus the index map needed to read it.
#[derive(Debug, Clone)]
pub struct TranscribedOcp {
    pub nlp: StructuredNlp,
    pub layout: OcpLayout,
    pub spec: OcpSpec,
}

impl TranscribedOcp {
    pub fn final_time(&self, w: &DVector<f64>) -> f64 {
        w[self.layout.time()]
    }
}

/// Nonlinear block of the transcription. Works on `y`, which is the prefix of `w`.
struct OcpResidual {
    layout: OcpLayout,
    dynamics: MultiIntegrator,
    v_max: Option<f64>,
    u_ball: Option<f64>,
    r_safe: f64,
}

impl OcpResidual {
    fn vec(y: &DVector<f64>, r: Range<usize>) -> DVector<f64> {
        DVector::from_column_slice(&y.as_slice()[r])
    }
}

impl NonlinearResidual for OcpResidual {
    fn eval(&self, y: &DVector<f64>) -> DVector<f64> {
        let l = &self.layout;
        let mut out = DVector::zeros(l.n_g());
        let h = y[l.time()] / l.horizon as f64;
        for k in 0..l.horizon {
            let x = Self::vec(y, l.state(k));
            let u = Self::vec(y, l.control(k));
            let next = rk4_next(&self.dynamics, &x, &u, h);
            out.rows_mut(l.defect_row(k), l.nx).copy_from(&(-next));
            if let Some(v_max) = self.v_max {
                let v = y.rows(l.velocity(k).start, l.dim);
                out[l.speed_row(k)] = v.norm_squared() - v_max * v_max;
            }
            if let Some(u_ball) = self.u_ball {
                out[l.control_row(k)] = u.norm_squared() - u_ball * u_ball;
            }
            if l.has_obstacle {
                let n = l.hyperplane(k);
                let p = l.position(k);
                out[l.obstacle_row(k)] =
                    y[n.start] * y[p.start] + y[n.start + 1] * y[p.start + 1] + y[n.start + 2] + self.r_safe;
            }
        }
        out
    }

    fn jacobian(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let l = &self.layout;
        let mut jac = DMatrix::zeros(l.n_g(), l.n_y());
        let n = l.horizon as f64;
        let h = y[l.time()] / n;
        for k in 0..l.horizon {
            let x = Self::vec(y, l.state(k));
            let u = Self::vec(y, l.control(k));
            let step = rk4_step(&self.dynamics, &x, &u, h);
            let row = l.defect_row(k);
            jac.view_mut((row, l.state(k).start), (l.nx, l.nx))
                .copy_from(&(-&step.d_x));
            jac.view_mut((row, l.control(k).start), (l.nx, l.nu))
                .copy_from(&(-&step.d_u));
            jac.view_mut((row, l.time()), (l.nx, 1)).copy_from(&(-&step.d_h / n));
            if self.v_max.is_some() {
                for i in l.velocity(k) {
                    jac[(l.speed_row(k), i)] = 2.0 * y[i];
                }
            }
            if self.u_ball.is_some() {
                for i in l.control(k) {
                    jac[(l.control_row(k), i)] = 2.0 * y[i];
                }
            }
            if l.has_obstacle {
                let nrow = l.obstacle_row(k);
                let nh = l.hyperplane(k);
                let p = l.position(k);
                jac[(nrow, nh.start)] = y[p.start];
                jac[(nrow, nh.start + 1)] = y[p.start + 1];
                jac[(nrow, nh.start + 2)] = 1.0;
                jac[(nrow, p.start)] = y[nh.start];
                jac[(nrow, p.start + 1)] = y[nh.start + 1];
            }
        }
        jac
    }
}

/// Collects rows of `A w + b <= 0`.
struct InequalityRows {
    n_w: usize,
    entries: Vec<Vec<(usize, f64)>>,
    offsets: Vec<f64>,
}

impl InequalityRows {
    fn push(&mut self, coeffs: &[(usize, f64)], offset: f64) {
        self.entries.push(coeffs.to_vec());
        self.offsets.push(offset);
    }

    /// `lo <= w_j <= hi`.
    fn bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.push(&[(j, 1.0)], -hi);
        self.push(&[(j, -1.0)], lo);
    }

    fn into_matrices(self) -> (DMatrix<f64>, DVector<f64>) {
        let mut a = DMatrix::zeros(self.entries.len(), self.n_w);
        for (i, row) in self.entries.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] += v;
            }
        }
        (a, DVector::from_vec(self.offsets))
    }
}

/// Multiple-shooting transcription of the time-optimal point-to-point problem.
pub fn build_p2p_ocp(spec: &OcpSpec) -> Result<TranscribedOcp> {
    spec.validate()?;
    let l = OcpLayout::new(spec);
    let n_w = l.n_w();

    let mut c = DVector::zeros(n_w);
    c[l.time()] = 1.0;
    for i in 0..l.nx {
        c[l.start_slack().start + i] = spec.mu0[i];
        c[l.end_slack().start + i] = spec.mu_n[i];
    }

    let mut eq_linear = DMatrix::zeros(l.n_g(), n_w);
    for k in 0..l.horizon {
        for i in 0..l.nx {
            eq_linear[(l.defect_row(k) + i, l.state(k + 1).start + i)] = 1.0;
        }
        if l.has_speed {
            eq_linear[(l.speed_row(k), l.speed_slack(k))] = 1.0;
        }
        if l.has_control_ball {
            eq_linear[(l.control_row(k), l.control_slack(k))] = 1.0;
        }
        if l.has_obstacle {
            eq_linear[(l.obstacle_row(k), l.obstacle_slack(k))] = 1.0;
        }
    }

    let mut rows = InequalityRows {
        n_w,
        entries: Vec::new(),
        offsets: Vec::new(),
    };
    for k in 0..=l.horizon {
        for (i, j) in l.state(k).enumerate() {
            rows.bounds(j, spec.x_min[i], spec.x_max[i]);
        }
    }
    for k in 0..l.horizon {
        for (i, j) in l.control(k).enumerate() {
            rows.bounds(j, spec.u_min[i], spec.u_max[i]);
        }
    }
    // -s <= x - xbar <= s at both ends
    for (slacks, k, target) in [
        (l.start_slack(), 0, &spec.x_start),
        (l.end_slack(), l.horizon, &spec.x_end),
    ] {
        for (i, &t) in target.iter().enumerate().take(l.nx) {
            let x = l.state(k).start + i;
            let s = slacks.start + i;
            rows.push(&[(x, 1.0), (s, -1.0)], -t);
            rows.push(&[(x, -1.0), (s, -1.0)], t);
        }
    }
    rows.bounds(l.time(), spec.t_bounds.0, spec.t_bounds.1);
    for k in 0..l.horizon {
        if l.has_speed {
            rows.push(&[(l.speed_slack(k), -1.0)], 0.0);
        }
        if l.has_control_ball {
            rows.push(&[(l.control_slack(k), -1.0)], 0.0);
        }
    }
    if let Some(obs) = &spec.obstacle {
        for k in 0..l.horizon {
            let nh = l.hyperplane(k);
            rows.push(&[(l.obstacle_slack(k), -1.0)], 0.0);
            // n_a' v + n_b >= 0 for every vertex
            for v in &obs.vertices {
                rows.push(&[(nh.start, -v[0]), (nh.start + 1, -v[1]), (nh.start + 2, -1.0)], 0.0);
            }
            for j in nh {
                rows.bounds(j, -1.0, 1.0);
            }
        }
    }
    let (a, b) = rows.into_matrices();

    let residual = OcpResidual {
        layout: l.clone(),
        dynamics: MultiIntegrator { dim: l.dim },
        v_max: spec.v_max,
        u_ball: spec.u_ball,
        r_safe: spec.obstacle.as_ref().map_or(0.0, |o| o.r_safe),
    };
    let nlp = StructuredNlp::new(c, eq_linear, a, b, (0..l.n_y()).collect(), Arc::new(residual))?;
    Ok(TranscribedOcp {
        nlp,
        layout: l,
        spec: spec.clone(),
    })
}

/// Feasible starting point from a constant-control rollout of length `t0`.
///
/// The start slack is zero, the end slack absorbs the miss at `x_N`, stage
/// slacks take their exact residuals and hyperplanes are computed from the
/// obstacle geometry.
pub fn init_feasible(spec: &OcpSpec, u_const: &[f64], t0: f64) -> Result<DVector<f64>> {
    spec.validate()?;
    let l = OcpLayout::new(spec);
    let fail = |stage: usize, reason: String| Err(FslpError::Initialization { stage, reason });
    if u_const.len() != l.nu {
        return Err(FslpError::Dimension {
            context: "constant control",
            expected: l.nu,
            found: u_const.len(),
        });
    }
    if (0..l.nu).any(|i| u_const[i] < spec.u_min[i] || u_const[i] > spec.u_max[i]) {
        return fail(0, "constant control violates the control box".into());
    }
    if !(t0 >= spec.t_bounds.0 && t0 <= spec.t_bounds.1) {
        return fail(0, format!("T0 = {t0} outside T_bounds"));
    }

    let dynamics = MultiIntegrator { dim: l.dim };
    let u = DVector::from_column_slice(u_const);
    let h = t0 / l.horizon as f64;
    let mut w = DVector::zeros(l.n_w());
    let mut x = DVector::from_column_slice(&spec.x_start);
    for k in 0..=l.horizon {
        if (0..l.nx).any(|i| x[i] < spec.x_min[i] || x[i] > spec.x_max[i]) {
            return fail(k, "rollout leaves the state box".into());
        }
        w.rows_mut(l.state(k).start, l.nx).copy_from(&x);
        if k < l.horizon {
            w.rows_mut(l.control(k).start, l.nu).copy_from(&u);
            x = rk4_next(&dynamics, &x, &u, h);
        }
    }
    w[l.time()] = t0;
    for i in 0..l.nx {
        w[l.end_slack().start + i] = (w[l.state(l.horizon).start + i] - spec.x_end[i]).abs();
    }

    for k in 0..l.horizon {
        if let Some(v_max) = spec.v_max {
            let v2 = w.rows(l.velocity(k).start, l.dim).norm_squared();
            let s = v_max * v_max - v2;
            if s < 0.0 {
                return fail(k, "rollout exceeds the speed bound".into());
            }
            w[l.speed_slack(k)] = s;
        }
        if let Some(u_ball) = spec.u_ball {
            let s = u_ball * u_ball - u.norm_squared();
            if s < 0.0 {
                return fail(k, "constant control exceeds the control-norm bound".into());
            }
            w[l.control_slack(k)] = s;
        }
        if let Some(obs) = &spec.obstacle {
            let p = [w[l.position(k).start], w[l.position(k).start + 1]];
            let Some(n) = obs.separating_hyperplane(p) else {
                return fail(
                    k,
                    "no separating hyperplane between the rollout and the obstacle".into(),
                );
            };
            let nh = l.hyperplane(k);
            for (i, j) in nh.enumerate() {
                w[j] = n[i];
            }
            w[l.obstacle_slack(k)] = -(n[0] * p[0] + n[1] * p[1] + n[2] + obs.r_safe);
        }
    }
    Ok(w)
}

/// Continuous-time minimum time of a rest-to-rest straight-line move under
/// acceleration and speed bounds (accelerate, optionally cruise, decelerate).
pub fn analytic_min_time(spec: &OcpSpec) -> Result<f64> {
    spec.validate()?;
    let unsupported = |why: &str| Err(FslpError::InvalidSpec(format!("no analytic minimum time: {why}")));
    if spec.obstacle.is_some() {
        return unsupported("obstacle present");
    }
    let dim = spec.system.dim();
    if (dim..2 * dim).any(|i| spec.x_start[i] != 0.0 || spec.x_end[i] != 0.0) {
        return unsupported("start and end must be at rest");
    }
    let moving: Vec<usize> = (0..dim).filter(|&i| spec.x_end[i] != spec.x_start[i]).collect();
    let axis = match moving.as_slice() {
        [] => return Ok(0.0),
        [axis] => *axis,
        _ => return unsupported("motion must be along a coordinate axis"),
    };
    let dist = (spec.x_end[axis] - spec.x_start[axis]).abs();
    let forward = spec.x_end[axis] > spec.x_start[axis];
    let (mut acc, mut dec) = if forward {
        (spec.u_max[axis], -spec.u_min[axis])
    } else {
        (-spec.u_min[axis], spec.u_max[axis])
    };
    if let Some(r) = spec.u_ball {
        acc = acc.min(r);
        dec = dec.min(r);
    }
    if !(acc > 0.0 && dec > 0.0) {
        return unsupported("control bounds do not allow the move");
    }
    let mut speed = if forward {
        spec.x_max[dim + axis]
    } else {
        -spec.x_min[dim + axis]
    };
    if let Some(v) = spec.v_max {
        speed = speed.min(v);
    }
    if !(speed > 0.0) {
        return unsupported("velocity bounds do not allow the move");
    }

    let peak = (2.0 * dist * acc * dec / (acc + dec)).sqrt();
    if peak <= speed {
        Ok(peak / acc + peak / dec)
    } else {
        let ramp = speed * speed / (2.0 * acc) + speed * speed / (2.0 * dec);
        Ok(speed / acc + speed / dec + (dist - ramp) / speed)
    }
}
