//! Small dense helpers: Householder QR with column pivoting, used for rank
//! checks and for the rank-revealing least-squares solve behind the Anderson
//! weights.

use nalgebra::{DMatrix, DVector};

/// Householder QR factorization `A P = Q R` with greedy column pivoting.
///
/// Factorization stops once the largest remaining column norm drops to
/// `rel_tol` times the largest column norm of the input; the number of
/// completed steps is the numerical rank.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    r: DMatrix<f64>,
    reflectors: Vec<DVector<f64>>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: &DMatrix<f64>, rel_tol: f64) -> Self {
        let (m, n) = a.shape();
        let mut r = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::new();
        let scale = (0..n).map(|j| a.column(j).norm()).fold(0.0_f64, f64::max);
        let threshold = rel_tol * scale;
        let mut rank = 0;

        for k in 0..m.min(n) {
            let (pivot, pivot_norm) = (k..n)
                .map(|j| (j, r.view((k, j), (m - k, 1)).norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_norm <= threshold || pivot_norm == 0.0 {
                break;
            }
            if pivot != k {
                r.swap_columns(k, pivot);
                perm.swap(k, pivot);
            }

            let mut v: DVector<f64> = r.view((k, k), (m - k, 1)).column(0).into_owned();
            let alpha = if v[0] >= 0.0 { -pivot_norm } else { pivot_norm };
            v[0] -= alpha;
            let vnorm = v.norm();
            if vnorm > 0.0 {
                v /= vnorm;
                for j in k..n {
                    let mut col = r.view_mut((k, j), (m - k, 1));
                    let dot = v.dot(&col);
                    col.zip_apply(&v, |c, vi| *c -= 2.0 * dot * vi);
                }
            }
            r[(k, k)] = alpha;
            for i in k + 1..m {
                r[(i, k)] = 0.0;
            }
            reflectors.push(v);
            rank += 1;
        }

        Self {
            r,
            reflectors,
            perm,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Column permutation: position `k` of the factorization holds input column `perm()[k]`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Upper-triangular factor (rows beyond the rank are not meaningful).
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Applies `Q'` to `b` in place.
    pub fn apply_qt(&self, b: &mut DVector<f64>) {
        let m = b.len();
        for (k, v) in self.reflectors.iter().enumerate() {
            let mut tail = b.rows_mut(k, m - k);
            let dot = v.dot(&tail);
            tail.axpy(-2.0 * dot, v, 1.0);
        }
    }

    /// Basic least-squares solution of `min ||A x - b||`: columns beyond the
    /// numerical rank get weight zero.
    pub fn solve_basic(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.perm.len();
        let mut qtb = b.clone();
        self.apply_qt(&mut qtb);
        let mut z = DVector::zeros(self.rank);
        for i in (0..self.rank).rev() {
            let mut s = qtb[i];
            for j in i + 1..self.rank {
                s -= self.r[(i, j)] * z[j];
            }
            z[i] = s / self.r[(i, i)];
        }
        let mut x = DVector::zeros(n);
        for (k, &col) in self.perm.iter().take(self.rank).enumerate() {
            x[col] = z[k];
        }
        x
    }
}

/// Numerical rank with tolerance relative to the largest column norm.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    PivotedQr::new(a, rel_tol).rank()
}

pub(crate) fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}
