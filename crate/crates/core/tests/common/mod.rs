//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use fslp::BoxedLp;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

/// Random LP with `n <= 6` variables and finite bounds.
///
/// With `feasible = true` the right-hand sides are built around a point
/// inside the box, so the LP has a solution.
pub fn random_lp(rng: &mut StdRng, feasible: bool) -> BoxedLp {
    let n = rng.gen_range(1..=6);
    let n_eq = rng.gen_range(0..=n.min(2));
    let n_in = rng.gen_range(0..=4);
    let lower = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..0.0));
    let upper = DVector::from_fn(n, |i, _| lower[i] + rng.gen_range(0.5..3.0));
    let x0 = DVector::from_fn(n, |i, _| rng.gen_range(lower[i]..upper[i]));
    let eq_matrix = DMatrix::from_fn(n_eq, n, |_, _| rng.gen_range(-1.0..1.0));
    let ineq_matrix = DMatrix::from_fn(n_in, n, |_, _| rng.gen_range(-1.0..1.0));
    let (eq_rhs, ineq_rhs) = if feasible {
        (
            &eq_matrix * &x0,
            &ineq_matrix * &x0 + DVector::from_fn(n_in, |_, _| rng.gen_range(0.0..0.5)),
        )
    } else {
        (
            DVector::from_fn(n_eq, |_, _| rng.gen_range(-3.0..3.0)),
            DVector::from_fn(n_in, |_, _| rng.gen_range(-3.0..1.0)),
        )
    };
    BoxedLp {
        cost: DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)),
        eq_matrix,
        eq_rhs,
        ineq_matrix,
        ineq_rhs,
        lower,
        upper,
    }
}

/// Minimum over all vertices of a bounded LP, `None` if no vertex is feasible.
///
/// Every vertex makes `n` linearly independent constraints active; all
/// equality rows are always among them.
pub fn brute_force_optimum(lp: &BoxedLp, tol: f64) -> Option<(f64, DVector<f64>)> {
    let n = lp.n_vars();
    // candidate active rows: inequalities, then lower and upper bounds
    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..lp.n_ineq() {
        rows.push((lp.ineq_matrix.row(i).transpose(), lp.ineq_rhs[i]));
    }
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        rows.push((e.clone(), lp.lower[j]));
        rows.push((e, lp.upper[j]));
    }
    let need = n.checked_sub(lp.n_eq())?;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for subset in combinations(rows.len(), need) {
        let mut m = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        for i in 0..lp.n_eq() {
            m.row_mut(i).copy_from(&lp.eq_matrix.row(i));
            rhs[i] = lp.eq_rhs[i];
        }
        for (k, &r) in subset.iter().enumerate() {
            m.row_mut(lp.n_eq() + k).copy_from(&rows[r].0.transpose());
            rhs[lp.n_eq() + k] = rows[r].1;
        }
        let Some(x) = m.lu().solve(&rhs) else { continue };
        if !x.iter().all(|v| v.is_finite()) || !is_feasible(lp, &x, tol) {
            continue;
        }
        let obj = lp.cost.dot(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best
}

pub fn is_feasible(lp: &BoxedLp, x: &DVector<f64>, tol: f64) -> bool {
    let eq_ok = (&lp.eq_matrix * x - &lp.eq_rhs).iter().all(|r| r.abs() <= tol);
    let in_ok = (&lp.ineq_matrix * x - &lp.ineq_rhs).iter().all(|r| *r <= tol);
    let box_ok = (0..x.len()).all(|j| x[j] >= lp.lower[j] - tol && x[j] <= lp.upper[j] + tol);
    eq_ok && in_ok && box_ok
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// `y_{l+1} = 1 - (radius^2 + (y_l - 1)^2) / 2`: the second coordinate of the
/// plain feasibility iterates on the unit circle from `w_hat = (0, 1)` with
/// the first coordinate pinned at `radius`.
pub fn circle_recursion(radius: f64, len: usize) -> Vec<f64> {
    let mut ys = Vec::with_capacity(len);
    let mut y = 1.0_f64;
    for _ in 0..len {
        ys.push(y);
        y = 1.0 - (radius * radius + (y - 1.0) * (y - 1.0)) / 2.0;
    }
    ys
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
