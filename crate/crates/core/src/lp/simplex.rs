//! Dense two-phase primal simplex with explicit variable bounds.
//!
//! Inequality rows get a slack in `[0, inf)`; rows that the starting point does
//! not satisfy (and every equality row) get a phase-1 artificial. Artificial
//! columns are never stored: an artificial only ever sits in its own row and
//! is discarded as soon as it leaves the basis. Nonbasic variables rest at a
//! finite bound, or at zero when free. Pricing is Dantzig's rule, switching to
//! Bland's rule during long runs of degenerate pivots.

use nalgebra::{DMatrix, DVector};

use super::{BoxedLp, LpOutcome, LpStatus};
use crate::error::Result;

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const RATIO_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexOptions {
    /// Maximum number of pivots (bound flips included) over both phases.
    /// Defaults to `50 * (n_vars + n_eq + n_ineq)`.
    pub pivot_limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LoopEnd {
    Optimal,
    Unbounded,
    Limit,
}

struct Tableau {
    m: usize,
    n: usize,
    /// `m x n`, row-major, equal to `B^{-1} M`.
    tab: Vec<f64>,
    /// Original constraint rows over structural and slack columns.
    rows: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Sign of the artificial column of each row.
    art_sign: Vec<f64>,
    /// Basic column of each row; `None` is that row's artificial.
    basis: Vec<Option<usize>>,
    basic_row: Vec<Option<usize>>,
    /// Current values of nonbasic columns (stale for basic ones).
    x: Vec<f64>,
    xb: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    reduced: Vec<f64>,
    pivots: usize,
    limit: usize,
    bland_after: usize,
}

pub fn solve_lp(lp: &BoxedLp, options: &SimplexOptions) -> Result<LpOutcome> {
    lp.validate()?;
    let n_w = lp.n_vars();
    let limit = options
        .pivot_limit
        .unwrap_or(50 * (n_w + lp.n_eq() + lp.n_ineq()).max(1));

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let infeasible = || LpOutcome {
        status: LpStatus::Infeasible,
        solution: DVector::zeros(n_w),
        objective: f64::NAN,
        pivot_count: 0,
    };

    // Single-variable inequality rows are bounds in disguise.
    let mut kept_rows = Vec::new();
    for i in 0..lp.n_ineq() {
        let row = lp.ineq_matrix.row(i);
        let nz: Vec<usize> = (0..n_w).filter(|&j| row[j] != 0.0).collect();
        match nz.as_slice() {
            [] => {
                if lp.ineq_rhs[i] < -PIVOT_TOL {
                    return Ok(infeasible());
                }
            }
            [j] => {
                let bound = lp.ineq_rhs[i] / row[*j];
                if row[*j] > 0.0 {
                    upper[*j] = upper[*j].min(bound);
                } else {
                    lower[*j] = lower[*j].max(bound);
                }
            }
            _ => kept_rows.push(i),
        }
    }
    for j in 0..n_w {
        if lower[j] > upper[j] {
            let scale = 1.0 + lower[j].abs().max(upper[j].abs());
            if lower[j] - upper[j] > PIVOT_TOL * scale {
                return Ok(infeasible());
            }
            upper[j] = lower[j];
        }
    }

    let mut t = Tableau::new(lp, &kept_rows, lower.as_slice(), upper.as_slice(), limit);
    let n_art = t.basis.iter().filter(|b| b.is_none()).count();

    if n_art > 0 {
        t.init_reduced_costs(Phase::One, &lp.cost);
        match t.run(Phase::One, 1e-9) {
            LoopEnd::Limit => return Ok(t.outcome(LpStatus::IterationLimit, lp)),
            LoopEnd::Unbounded | LoopEnd::Optimal => {}
        }
        t.recompute_basics();
        let art_sum: f64 = (0..t.m).filter(|&i| t.basis[i].is_none()).map(|i| t.xb[i].abs()).sum();
        let rhs_scale = 1.0 + t.rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if art_sum > 1e-9 * rhs_scale {
            return Ok(t.outcome(LpStatus::Infeasible, lp));
        }
        t.drive_out_artificials();
        t.recompute_basics();
    }

    let cost_scale = lp.cost.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    t.init_reduced_costs(Phase::Two, &lp.cost);
    let end = t.run(Phase::Two, 1e-9 * cost_scale);
    t.recompute_basics();
    Ok(match end {
        LoopEnd::Optimal => t.outcome(LpStatus::Optimal, lp),
        LoopEnd::Unbounded => t.outcome(LpStatus::Unbounded, lp),
        LoopEnd::Limit => t.outcome(LpStatus::IterationLimit, lp),
    })
}

impl Tableau {
    fn new(lp: &BoxedLp, kept_rows: &[usize], lower: &[f64], upper: &[f64], limit: usize) -> Self {
        let n_w = lp.n_vars();
        let n_eq = lp.n_eq();
        let n_s = kept_rows.len();
        let m = n_eq + n_s;
        let n = n_w + n_s;

        let mut rows = DMatrix::zeros(m, n);
        let mut rhs = DVector::zeros(m);
        rows.view_mut((0, 0), (n_eq, n_w)).copy_from(&lp.eq_matrix);
        rhs.rows_mut(0, n_eq).copy_from(&lp.eq_rhs);
        for (k, &i) in kept_rows.iter().enumerate() {
            rows.view_mut((n_eq + k, 0), (1, n_w)).copy_from(&lp.ineq_matrix.row(i));
            rows[(n_eq + k, n_w + k)] = 1.0;
            rhs[n_eq + k] = lp.ineq_rhs[i];
        }

        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        lo.extend(std::iter::repeat_n(0.0, n_s));
        hi.extend(std::iter::repeat_n(f64::INFINITY, n_s));

        // Nonbasic start: the finite bound closest to zero, or zero if free.
        let x: Vec<f64> = (0..n)
            .map(|j| match (lo[j].is_finite(), hi[j].is_finite()) {
                (true, true) => {
                    if lo[j].abs() <= hi[j].abs() {
                        lo[j]
                    } else {
                        hi[j]
                    }
                }
                (true, false) => lo[j],
                (false, true) => hi[j],
                (false, false) => 0.0,
            })
            .collect();
        let residual = &rhs - &rows * DVector::from_column_slice(&x);

        let mut basis = vec![None; m];
        let mut basic_row = vec![None; n];
        let mut art_sign = vec![1.0; m];
        let mut xb = vec![0.0; m];
        let mut tab = vec![0.0; m * n];
        for i in 0..m {
            let r = residual[i];
            let sign = if i >= n_eq && r >= 0.0 {
                let slack = n_w + (i - n_eq);
                basis[i] = Some(slack);
                basic_row[slack] = Some(i);
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                1.0
            };
            art_sign[i] = sign;
            xb[i] = r.abs();
            for j in 0..n {
                tab[i * n + j] = sign * rows[(i, j)];
            }
        }

        Self {
            m,
            n,
            tab,
            rows,
            rhs,
            art_sign,
            basis,
            basic_row,
            x,
            xb,
            lo,
            hi,
            reduced: vec![0.0; n],
            pivots: 0,
            limit,
            bland_after: 3 * (n_w + n_eq).max(1),
        }
    }

    fn column_cost(phase: Phase, cost: &DVector<f64>, j: usize) -> f64 {
        match phase {
            Phase::One => 0.0,
            Phase::Two => cost.get(j).copied().unwrap_or(0.0),
        }
    }

    fn init_reduced_costs(&mut self, phase: Phase, cost: &DVector<f64>) {
        let n = self.n;
        for j in 0..n {
            self.reduced[j] = if self.basic_row[j].is_some() {
                0.0
            } else {
                Self::column_cost(phase, cost, j)
            };
        }
        for i in 0..self.m {
            let cb = match (self.basis[i], phase) {
                (None, Phase::One) => 1.0,
                (None, Phase::Two) => 0.0,
                (Some(b), _) => Self::column_cost(phase, cost, b),
            };
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * n..(i + 1) * n];
            for (j, &a) in row.iter().enumerate() {
                if self.basic_row[j].is_none() {
                    self.reduced[j] -= cb * a;
                }
            }
        }
    }

    fn basic_bounds(&self, i: usize, phase: Phase) -> (f64, f64) {
        match self.basis[i] {
            Some(b) => (self.lo[b], self.hi[b]),
            None => match phase {
                Phase::One => (0.0, f64::INFINITY),
                Phase::Two => (0.0, 0.0),
            },
        }
    }

    fn run(&mut self, phase: Phase, dual_tol: f64) -> LoopEnd {
        let mut degenerate_run = 0usize;
        loop {
            if self.pivots >= self.limit {
                return LoopEnd::Limit;
            }
            let bland = degenerate_run > self.bland_after;
            let Some((q, dir)) = self.select_entering(dual_tol, bland) else {
                return LoopEnd::Optimal;
            };
            let Some((step, leave)) = self.ratio_test(q, dir, phase, bland) else {
                return LoopEnd::Unbounded;
            };
            self.pivots += 1;
            if step <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.apply_step(q, dir, step, leave);
        }
    }

    fn select_entering(&self, tol: f64, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.n {
            if self.basic_row[j].is_some() || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.reduced[j];
            let dir = if dj < -tol && self.x[j] < self.hi[j] {
                1.0
            } else if dj > tol && self.x[j] > self.lo[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if dj.abs() > best_score {
                best_score = dj.abs();
                best = Some((j, dir));
            }
        }
        best
    }

    /// Returns the step length and the leaving row with the bound it hits
    /// (`true` for upper); `None` for the leaving row means a bound flip of
    /// the entering column. `None` overall means an unbounded ray.
    fn ratio_test(&self, q: usize, dir: f64, phase: Phase, bland: bool) -> Option<(f64, Option<(usize, bool)>)> {
        let n = self.n;
        let mut best_t = if dir > 0.0 {
            self.hi[q] - self.x[q]
        } else {
            self.x[q] - self.lo[q]
        };
        let mut leave: Option<(usize, bool)> = None;
        let mut best_alpha = 0.0_f64;

        for i in 0..self.m {
            let alpha = dir * self.tab[i * n + q];
            if alpha.abs() <= PIVOT_TOL {
                continue;
            }
            let (lb, ub) = self.basic_bounds(i, phase);
            let (t, to_upper) = if alpha > 0.0 {
                if lb == f64::NEG_INFINITY {
                    continue;
                }
                ((self.xb[i] - lb) / alpha, false)
            } else {
                if ub == f64::INFINITY {
                    continue;
                }
                ((ub - self.xb[i]) / -alpha, true)
            };
            let t = t.max(0.0);
            let better = if t < best_t - RATIO_TIE {
                true
            } else if t <= best_t + RATIO_TIE {
                match leave {
                    None => t < best_t,
                    Some((r, _)) => {
                        if bland {
                            self.var_index(i) < self.var_index(r)
                        } else {
                            alpha.abs() > best_alpha
                        }
                    }
                }
            } else {
                false
            };
            if better {
                best_t = t;
                leave = Some((i, to_upper));
                best_alpha = alpha.abs();
            }
        }

        if best_t == f64::INFINITY {
            return None;
        }
        Some((best_t, leave))
    }

    fn var_index(&self, row: usize) -> usize {
        self.basis[row].unwrap_or(self.n + row)
    }

    fn apply_step(&mut self, q: usize, dir: f64, step: f64, leave: Option<(usize, bool)>) {
        let n = self.n;
        let delta = dir * step;
        if delta != 0.0 {
            for i in 0..self.m {
                self.xb[i] -= self.tab[i * n + q] * delta;
            }
        }
        let entering_value = self.x[q] + delta;

        let Some((r, to_upper)) = leave else {
            self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            return;
        };

        if let Some(b) = self.basis[r] {
            self.x[b] = if to_upper { self.hi[b] } else { self.lo[b] };
            self.basic_row[b] = None;
        }
        self.basis[r] = Some(q);
        self.basic_row[q] = Some(r);
        self.x[q] = entering_value;
        self.xb[r] = entering_value;
        self.pivot(r, q);
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let inv = 1.0 / self.tab[r * n + q];
        let mut pivot_row: Vec<f64> = self.tab[r * n..(r + 1) * n].iter().map(|v| v * inv).collect();
        pivot_row[q] = 1.0;
        let nz: Vec<usize> = (0..n).filter(|&j| pivot_row[j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * n + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * n..(i + 1) * n];
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[q] = 0.0;
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for &j in &nz {
                self.reduced[j] -= f * pivot_row[j];
            }
        }
        self.reduced[q] = 0.0;
        self.tab[r * n..(r + 1) * n].copy_from_slice(&pivot_row);
    }

    /// Replaces zero-level artificials by structural or slack columns where the
    /// row allows it; rows with no usable entry are redundant and keep theirs.
    fn drive_out_artificials(&mut self) {
        let n = self.n;
        for r in 0..self.m {
            if self.basis[r].is_some() {
                continue;
            }
            let candidate = (0..n)
                .filter(|&j| self.basic_row[j].is_none())
                .map(|j| (j, self.tab[r * n + j].abs()))
                .filter(|&(_, a)| a > PIVOT_TOL)
                .fold(None, |best: Option<(usize, f64)>, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                });
            if let Some((q, _)) = candidate {
                self.basis[r] = Some(q);
                self.basic_row[q] = Some(r);
                self.xb[r] = self.x[q];
                self.pivot(r, q);
                self.pivots += 1;
            }
        }
    }

    /// Recomputes basic values from the original rows to shed accumulated
    /// round-off.
    fn recompute_basics(&mut self) {
        let m = self.m;
        if m == 0 {
            return;
        }
        let mut basis_matrix = DMatrix::zeros(m, m);
        let mut rhs = self.rhs.clone();
        for j in 0..self.n {
            if self.basic_row[j].is_none() && self.x[j] != 0.0 {
                rhs.axpy(-self.x[j], &self.rows.column(j), 1.0);
            }
        }
        for i in 0..m {
            match self.basis[i] {
                Some(b) => basis_matrix.set_column(i, &self.rows.column(b)),
                None => basis_matrix[(i, i)] = self.art_sign[i],
            }
        }
        if let Some(sol) = basis_matrix.lu().solve(&rhs) {
            if sol.iter().all(|v| v.is_finite()) {
                self.xb.copy_from_slice(sol.as_slice());
            }
        }
    }

    fn outcome(&self, status: LpStatus, lp: &BoxedLp) -> LpOutcome {
        let n_w = lp.n_vars();
        let mut solution = DVector::zeros(n_w);
        for j in 0..n_w {
            let v = match self.basic_row[j] {
                Some(i) => self.xb[i],
                None => self.x[j],
            };
            solution[j] = v.clamp(self.lo[j], self.hi[j]);
        }
        let objective = if status == LpStatus::Optimal {
            lp.objective(&solution)
        } else {
            f64::NAN
        };
        LpOutcome {
            status,
            solution,
            objective,
            pivot_count: self.pivots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lp(cost: &[f64], eq: (&[f64], &[f64]), ineq: (&[f64], &[f64]), lower: &[f64], upper: &[f64]) -> BoxedLp {
        let n = cost.len();
        BoxedLp {
            cost: DVector::from_row_slice(cost),
            eq_matrix: DMatrix::from_row_slice(eq.1.len(), n, eq.0),
            eq_rhs: DVector::from_row_slice(eq.1),
            ineq_matrix: DMatrix::from_row_slice(ineq.1.len(), n, ineq.0),
            ineq_rhs: DVector::from_row_slice(ineq.1),
            lower: DVector::from_row_slice(lower),
            upper: DVector::from_row_slice(upper),
        }
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn small_vertex_problem() {
        let p = lp(
            &[-2.0, -1.0],
            (&[], &[]),
            (&[1.0, 1.0], &[1.0]),
            &[0.0, 0.0],
            &[INF, INF],
        );
        let out = solve_lp(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_abs_diff_eq!(out.solution[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.objective, -2.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_only_problem() {
        let p = lp(&[1.0], (&[], &[]), (&[], &[]), &[0.0], &[1.0]);
        let out = solve_lp(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.solution[0], 0.0);
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn conflicting_row_and_bound_is_infeasible() {
        let p = lp(&[1.0], (&[], &[]), (&[1.0], &[-1.0]), &[0.0], &[INF]);
        assert_eq!(
            solve_lp(&p, &SimplexOptions::default()).unwrap().status,
            LpStatus::Infeasible
        );
        // same conflict through a two-variable row
        let p = lp(
            &[1.0, 0.0],
            (&[], &[]),
            (&[1.0, 1.0], &[-1.0]),
            &[0.0, 0.0],
            &[INF, INF],
        );
        assert_eq!(
            solve_lp(&p, &SimplexOptions::default()).unwrap().status,
            LpStatus::Infeasible
        );
        // inconsistent equalities
        let p = lp(
            &[0.0, 0.0],
            (&[1.0, 1.0, 1.0, 1.0], &[1.0, 2.0]),
            (&[], &[]),
            &[-INF, -INF],
            &[INF, INF],
        );
        assert_eq!(
            solve_lp(&p, &SimplexOptions::default()).unwrap().status,
            LpStatus::Infeasible
        );
    }

    #[test]
    fn unbounded_ray_is_detected() {
        let p = lp(
            &[-1.0, 0.0],
            (&[], &[]),
            (&[-1.0, 1.0], &[0.0]),
            &[0.0, 0.0],
            &[INF, INF],
        );
        assert_eq!(
            solve_lp(&p, &SimplexOptions::default()).unwrap().status,
            LpStatus::Unbounded
        );
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x + y s.t. x - y = 1, x + 2y >= -2 (=> -x - 2y <= 2), both free
        let p = lp(
            &[1.0, 1.0],
            (&[1.0, -1.0], &[1.0]),
            (&[-1.0, -2.0], &[2.0]),
            &[-INF, -INF],
            &[INF, INF],
        );
        let out = solve_lp(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_abs_diff_eq!(out.solution[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn redundant_equality_rows() {
        // x + y = 1 twice; min x
        let p = lp(
            &[1.0, 0.0],
            (&[1.0, 1.0, 1.0, 1.0], &[1.0, 1.0]),
            (&[], &[]),
            &[0.0, 0.0],
            &[2.0, 2.0],
        );
        let out = solve_lp(&p, &SimplexOptions::default()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_abs_diff_eq!(out.solution[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pivot_limit_is_reported() {
        let p = lp(
            &[-2.0, -1.0],
            (&[], &[]),
            (&[1.0, 1.0], &[1.0]),
            &[0.0, 0.0],
            &[INF, INF],
        );
        let out = solve_lp(&p, &SimplexOptions { pivot_limit: Some(0) }).unwrap();
        assert_eq!(out.status, LpStatus::IterationLimit);
    }

    #[test]
    fn crossing_bounds_are_rejected_as_invalid() {
        let p = lp(&[1.0], (&[], &[]), (&[], &[]), &[1.0], &[0.0]);
        assert!(solve_lp(&p, &SimplexOptions::default()).is_err());
    }
}
