//! Gram matrices and the rank-revealing ("full-rank") Cholesky factorization.
//!
//! A symmetric positive semidefinite `q x q` matrix `A` of rank `r` is written
//! as `A = L Lᵀ` with `L` of size `q x r`. Each step takes the remaining row
//! with the largest residual diagonal as the next pivot and fills one column
//! of `L`; the factorization stops once no residual exceeds the pivot
//! tolerance. For exact PSD input those residuals are identically zero, so
//! the rows left over lose nothing.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Relative asymmetry accepted by [`full_rank_cholesky`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Multiple of the pivot tolerance below which a negative residual pivot is
/// reported as loss of positive semidefiniteness instead of being skipped.
const NOT_PSD_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GramSide {
    /// `MᵀM` (`cols x cols`).
    Left,
    /// `MMᵀ` (`rows x rows`).
    Right,
}

/// Pivot acceptance threshold for [`full_rank_cholesky`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PivotTolerance {
    /// `q * eps * max_i A[i,i]`, or `eps` if the diagonal is all zero.
    #[default]
    Auto,
    Fixed(f64),
}

impl PivotTolerance {
    pub fn resolve(self, a: &DenseMatrix) -> f64 {
        self.resolve_scaled(a, a.rows())
    }

    /// Like [`PivotTolerance::resolve`] for a Gram matrix formed as a sum of
    /// `inner` products: `Auto` scales by `max(q, inner)` instead of `q`.
    pub fn for_gram(self, a: &DenseMatrix, inner: usize) -> PivotTolerance {
        PivotTolerance::Fixed(self.resolve_scaled(a, a.rows().max(inner)))
    }

    fn resolve_scaled(self, a: &DenseMatrix, scale: usize) -> f64 {
        match self {
            PivotTolerance::Fixed(t) => t,
            PivotTolerance::Auto => {
                let max_diag = a.diagonal().into_iter().fold(0.0_f64, f64::max);
                if max_diag > 0.0 {
                    scale as f64 * f64::EPSILON * max_diag
                } else {
                    f64::EPSILON
                }
            }
        }
    }
}

/// Output of [`full_rank_cholesky`].
#[derive(Debug, Clone)]
pub struct FullRankCholesky {
    /// `q x r` factor; column `c` is zero at `pivot_rows[..c]`.
    pub factor: DenseMatrix,
    pub rank: usize,
    pub pivot_tol: f64,
    /// Rows at which a pivot was accepted, in the order they were chosen.
    pub pivot_rows: Vec<usize>,
}

impl FullRankCholesky {
    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.factor
            .matmul_transpose(&self.factor)
            .expect("factor is conformable with its own transpose")
    }
}

/// `MᵀM` or `MMᵀ`, explicitly symmetrized.
pub fn gram(m: &DenseMatrix, side: GramSide) -> Result<DenseMatrix> {
    if m.is_empty() {
        return Err(Error::Dimension(format!(
            "Gram matrix of an empty {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.ensure_finite("gram input")?;
    let t = m.transpose();
    let mut g = match side {
        GramSide::Left => t.matmul(m)?,
        GramSide::Right => m.matmul(&t)?,
    };
    g.symmetrize();
    Ok(g)
}

/// Rank-revealing Cholesky factorization `A = L Lᵀ` of a symmetric PSD matrix.
pub fn full_rank_cholesky(a: &DenseMatrix, tol: PivotTolerance) -> Result<FullRankCholesky> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "Cholesky factorization needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    a.ensure_finite("Cholesky input")?;
    let scale = a.max_abs();
    if a.asymmetry() > SYMMETRY_TOL * scale {
        return Err(Error::Shape(format!(
            "matrix is not symmetric (max asymmetry {:e}, scale {:e})",
            a.asymmetry(),
            scale
        )));
    }
    let tol = tol.resolve(a);
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Parameter(format!("pivot tolerance {tol} is invalid")));
    }

    let q = a.rows();
    // Row-major q x q workspace indexed by original row; only the first
    // `rank` columns are ever written.
    let mut work = vec![0.0; q * q];
    let mut used = vec![false; q];
    // Running residual diagonal, used only to choose the next pivot.
    let mut resid = a.diagonal();
    let mut pivot_rows = Vec::new();
    let mut rank = 0usize;

    while rank < q {
        let mut j = match largest_unused(&resid, &used) {
            Some(j) => j,
            None => break,
        };
        let mut d = exact_residual(a, &work, q, rank, j);
        if d <= tol {
            // Refresh every candidate before concluding that none is left.
            for i in (0..q).filter(|&i| !used[i]) {
                resid[i] = exact_residual(a, &work, q, rank, i);
            }
            j = largest_unused(&resid, &used).expect("an unused row remains");
            d = resid[j];
            if d <= tol {
                if let Some(i) = (0..q).find(|&i| !used[i] && resid[i] < -NOT_PSD_FACTOR * tol) {
                    return Err(Error::NotPsd {
                        row: i,
                        pivot: resid[i],
                        tol,
                    });
                }
                break;
            }
        }
        let pivot = d.sqrt();
        let col = rank;
        work[j * q + col] = pivot;
        used[j] = true;
        let lj = work[j * q..j * q + col].to_vec();
        let a_col = a.row(j);
        let fill = |(i, (li, r)): (usize, (&mut [f64], &mut f64))| {
            if used[i] {
                return;
            }
            let v = (a_col[i] - dot(&li[..col], &lj)) / pivot;
            li[col] = v;
            *r -= v * v;
        };
        if (q - rank) * (col + 1) >= 1 << 14 {
            work.par_chunks_mut(q)
                .zip(resid.par_iter_mut())
                .with_min_len(8)
                .enumerate()
                .for_each(fill);
        } else {
            work.chunks_mut(q).zip(resid.iter_mut()).enumerate().for_each(fill);
        }
        pivot_rows.push(j);
        rank += 1;
    }

    let mut factor = DenseMatrix::zeros(q, rank);
    for i in 0..q {
        factor.row_mut(i).copy_from_slice(&work[i * q..i * q + rank]);
    }
    Ok(FullRankCholesky {
        factor,
        rank,
        pivot_tol: tol,
        pivot_rows,
    })
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
///
/// `S = C Cᵀ`, `S⁻¹ = C⁻ᵀ C⁻¹`; the result is symmetrized.
pub fn spd_inverse(s: &DenseMatrix) -> Result<DenseMatrix> {
    if !s.is_square() {
        return Err(Error::Shape(format!(
            "inverse needs a square matrix, got {}x{}",
            s.rows(),
            s.cols()
        )));
    }
    let n = s.rows();
    let c = cholesky_strict(s)?;

    // Columns of C⁻¹ by forward substitution against the identity.
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .with_min_len(16)
        .map(|j| {
            let mut x = vec![0.0; n];
            x[j] = 1.0 / c[(j, j)];
            for i in (j + 1)..n {
                let ci = c.row(i);
                x[i] = -dot(&ci[j..i], &x[j..i]) / ci[i];
            }
            x
        })
        .collect();
    let mut c_inv = DenseMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in j..n {
            c_inv[(i, j)] = col[i];
        }
    }
    let mut inv = c_inv.transpose_matmul(&c_inv)?;
    inv.symmetrize();
    Ok(inv)
}

/// Plain Cholesky `S = C Cᵀ` that fails on any non-positive pivot.
fn cholesky_strict(s: &DenseMatrix) -> Result<DenseMatrix> {
    let n = s.rows();
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let (d, cj) = {
            let cj = &c.row(j)[..j];
            (s[(j, j)] - dot(cj, cj), cj.to_vec())
        };
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite: pivot {d:e} at row {j}"
            )));
        }
        let pivot = d.sqrt();
        c[(j, j)] = pivot;
        for i in (j + 1)..n {
            let v = (s[(i, j)] - dot(&c.row(i)[..j], &cj)) / pivot;
            c[(i, j)] = v;
        }
    }
    Ok(c)
}

/// Unused row with the largest running residual; ties go to the lower index.
fn largest_unused(resid: &[f64], used: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &r) in resid.iter().enumerate() {
        if !used[i] && best.is_none_or(|b| r > resid[b]) {
            best = Some(i);
        }
    }
    best
}

/// `A[i,i] − Σ_c L[i,c]²` over the first `rank` columns of the workspace.
fn exact_residual(a: &DenseMatrix, work: &[f64], q: usize, rank: usize, i: usize) -> f64 {
    let li = &work[i * q..i * q + rank];
    a[(i, i)] - dot(li, li)
}

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn gram_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(gram(&a, GramSide::Left).unwrap(), m(&[&[10.0, 14.0], &[14.0, 20.0]]));
        let i3 = DenseMatrix::identity(3);
        assert_eq!(gram(&i3, GramSide::Left).unwrap(), i3);
        assert_eq!(gram(&i3, GramSide::Right).unwrap(), i3);
        let v = m(&[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(
            gram(&v, GramSide::Right).unwrap(),
            m(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[3.0, 6.0, 9.0]])
        );
    }

    #[test]
    fn gram_rejects_empty() {
        assert!(matches!(
            gram(&DenseMatrix::zeros(0, 3), GramSide::Left),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn cholesky_examples() {
        let f = full_rank_cholesky(&DenseMatrix::identity(2), PivotTolerance::Auto).unwrap();
        assert_eq!(f.rank, 2);
        assert_eq!(f.factor, DenseMatrix::identity(2));

        let f = full_rank_cholesky(&m(&[&[1.0, 2.0], &[2.0, 4.0]]), PivotTolerance::Auto).unwrap();
        assert_eq!(f.rank, 1);
        assert_eq!(f.factor, m(&[&[1.0], &[2.0]]));
        assert_eq!(f.pivot_rows, vec![1]);

        let f = full_rank_cholesky(&m(&[&[4.0, 2.0], &[2.0, 2.0]]), PivotTolerance::Auto).unwrap();
        assert_eq!(f.rank, 2);
        assert_eq!(f.factor, m(&[&[2.0, 0.0], &[1.0, 1.0]]));
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let f = full_rank_cholesky(&DenseMatrix::zeros(3, 3), PivotTolerance::Auto).unwrap();
        assert_eq!(f.rank, 0);
        assert_eq!(f.factor.shape(), (3, 0));
        assert_eq!(f.pivot_tol, f64::EPSILON);
    }

    #[test]
    fn skipped_leading_row() {
        // First row/column zero: it never becomes a pivot.
        let a = m(&[&[0.0, 0.0, 0.0], &[0.0, 4.0, 2.0], &[0.0, 2.0, 5.0]]);
        let f = full_rank_cholesky(&a, PivotTolerance::Auto).unwrap();
        assert_eq!(f.rank, 2);
        assert_eq!(f.pivot_rows, vec![2, 1]);
        assert_eq!(f.factor.row(0), &[0.0, 0.0]);
        assert!(f.reconstruct().sub(&a).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let asym = m(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            full_rank_cholesky(&asym, PivotTolerance::Auto),
            Err(Error::Shape(_))
        ));
        let indefinite = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(matches!(
            full_rank_cholesky(&indefinite, PivotTolerance::Auto),
            Err(Error::NotPsd { row: 1, .. })
        ));
        assert!(matches!(
            full_rank_cholesky(&DenseMatrix::zeros(2, 3), PivotTolerance::Auto),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn spd_inverse_small() {
        let s = m(&[&[4.0, 2.0], &[2.0, 2.0]]);
        let inv = spd_inverse(&s).unwrap();
        let expected = m(&[&[0.5, -0.5], &[-0.5, 1.0]]);
        assert!(inv.sub(&expected).unwrap().max_abs() < 1e-15);
        assert!(spd_inverse(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).is_err());
    }
}
