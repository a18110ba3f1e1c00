//! Householder QR with column pivoting and the least-squares solver built on it.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::cholesky::dot;
use crate::linalg::DenseMatrix;

/// Compact Householder factorization `A P = Q R` of an `m x n` matrix.
///
/// Storage is column-oriented: row `j` of `cols` holds column `j` of the
/// working matrix, with `R[0..=j, j]` in its leading entries and the
/// essential part of reflector `j` below the diagonal.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    cols: DenseMatrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    m: usize,
    n: usize,
}

impl HouseholderQr {
    /// Factorizes `A`, choosing the largest remaining column as pivot at each step.
    pub fn pivoted(a: &DenseMatrix) -> Self {
        Self::from_columns(a.transpose(), true)
    }

    /// Factorizes the `m x n` matrix whose columns are the rows of `cols`.
    pub(crate) fn from_columns(mut cols: DenseMatrix, pivot: bool) -> Self {
        let (n, m) = cols.shape();
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = vec![0.0; steps];
        let mut norms: Vec<f64> = (0..n).map(|j| dot(cols.row(j), cols.row(j))).collect();
        let mut ref_norms = norms.clone();

        for k in 0..steps {
            if pivot {
                let p = (k..n)
                    .max_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(b.cmp(&a)))
                    .unwrap_or(k);
                if p != k {
                    swap_rows(&mut cols, k, p);
                    norms.swap(k, p);
                    ref_norms.swap(k, p);
                    perm.swap(k, p);
                }
            }

            let (head, tail) = cols.as_mut_slice().split_at_mut((k + 1) * m);
            let x = &mut head[k * m + k..(k + 1) * m];
            tau[k] = make_reflector(x);
            let t = tau[k];
            let v = &x[1..];

            let apply = |col: &mut [f64]| {
                if t != 0.0 {
                    let w = col[k] + dot(v, &col[k + 1..]);
                    col[k] -= t * w;
                    let tw = t * w;
                    for (c, &vi) in col[k + 1..].iter_mut().zip(v) {
                        *c -= tw * vi;
                    }
                }
            };
            if (n - k - 1) * (m - k) >= 1 << 15 {
                tail.par_chunks_mut(m).with_min_len(4).for_each(apply);
            } else {
                tail.chunks_mut(m).for_each(apply);
            }

            if pivot {
                for j in (k + 1)..n {
                    let col = &tail[(j - k - 1) * m..(j - k) * m];
                    let updated = norms[j] - col[k] * col[k];
                    norms[j] = if updated <= 1e-8 * ref_norms[j] {
                        // Downdating lost too many digits: recompute.
                        let fresh = dot(&col[k + 1..], &col[k + 1..]);
                        ref_norms[j] = fresh;
                        fresh
                    } else {
                        updated
                    };
                }
            }
        }

        HouseholderQr {
            cols,
            tau,
            perm,
            m,
            n,
        }
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    /// `R[i, j]` for `i <= j < n`, `i < min(m, n)`.
    #[inline]
    pub fn r(&self, i: usize, j: usize) -> f64 {
        self.cols[(j, i)]
    }

    /// Column permutation: column `k` of `A P` is column `perm[k]` of `A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Number of diagonal entries of `R` above `rel_tol * |R[0,0]|`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let steps = self.tau.len();
        if steps == 0 {
            return 0;
        }
        let lead = self.r(0, 0).abs();
        if lead == 0.0 {
            return 0;
        }
        (0..steps)
            .take_while(|&k| self.r(k, k).abs() > rel_tol * lead)
            .count()
    }

    /// Applies `Qᵀ` (first `count` reflectors) to a length-`m` vector in place.
    pub(crate) fn apply_qt(&self, b: &mut [f64], count: usize) {
        for k in 0..count.min(self.tau.len()) {
            self.reflect(k, b);
        }
    }

    /// Applies `Q` to a length-`m` vector in place.
    pub(crate) fn apply_q(&self, b: &mut [f64]) {
        for k in (0..self.tau.len()).rev() {
            self.reflect(k, b);
        }
    }

    #[inline]
    fn reflect(&self, k: usize, b: &mut [f64]) {
        let t = self.tau[k];
        if t == 0.0 {
            return;
        }
        let v = &self.cols.row(k)[k + 1..];
        let w = b[k] + dot(v, &b[k + 1..]);
        b[k] -= t * w;
        let tw = t * w;
        for (bi, &vi) in b[k + 1..].iter_mut().zip(v) {
            *bi -= tw * vi;
        }
    }
}

fn swap_rows(m: &mut DenseMatrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let cols = m.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let (first, second) = m.as_mut_slice().split_at_mut(hi * cols);
    first[lo * cols..(lo + 1) * cols].swap_with_slice(&mut second[..cols]);
}

/// Overwrites `x` with `[beta, v]` such that `(I - tau [1;v][1;v]ᵀ) x = beta e₁`.
fn make_reflector(x: &mut [f64]) -> f64 {
    let alpha = x[0];
    let tail_sq = dot(&x[1..], &x[1..]);
    if tail_sq == 0.0 {
        return 0.0;
    }
    let norm = alpha.hypot(tail_sq.sqrt());
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for xi in &mut x[1..] {
        *xi *= scale;
    }
    x[0] = beta;
    tau
}

/// A minimizer `X` of `‖A X - B‖_F` by column-pivoted QR.
///
/// For rank-deficient `A` this is the basic solution (zero in the trailing
/// pivot positions), not the minimum-norm one. Rank is decided with the
/// relative threshold `max(m, n) * eps` on the diagonal of `R`.
pub fn lstsq_qr(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "least squares with a {}x{} system and a {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    a.ensure_finite("least-squares matrix")?;
    b.ensure_finite("least-squares right-hand side")?;
    let (m, n) = a.shape();
    let qr = HouseholderQr::pivoted(a);
    let rank = qr.numerical_rank(m.max(n) as f64 * f64::EPSILON);

    // Each column of B is solved independently.
    let bt = b.transpose();
    let solutions: Vec<Vec<f64>> = (0..b.cols())
        .into_par_iter()
        .with_min_len(8)
        .map(|c| {
            let mut y = bt.row(c).to_vec();
            qr.apply_qt(&mut y, rank);
            y.truncate(rank);
            // Column-oriented back substitution with R[0..rank, 0..rank].
            for j in (0..rank).rev() {
                let z = y[j] / qr.r(j, j);
                y[j] = z;
                let rcol = &qr.cols.row(j)[..j];
                for (yi, &rij) in y[..j].iter_mut().zip(rcol) {
                    *yi -= z * rij;
                }
            }
            y
        })
        .collect();

    let mut x = DenseMatrix::zeros(n, b.cols());
    for (c, z) in solutions.iter().enumerate() {
        for (k, &zk) in z.iter().enumerate() {
            x[(qr.perm[k], c)] = zk;
        }
    }
    Ok(x)
}
