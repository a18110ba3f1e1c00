//! Moore-Penrose inverse through the full-rank Cholesky factor of a Gram matrix.
//!
//! With `MᵀM = L Lᵀ` (`L` of size `q x r`, rank `r`),
//!
//! ```text
//! (MᵀM)† = L (LᵀL)⁻¹ (LᵀL)⁻¹ Lᵀ
//! M†     = (MᵀM)† Mᵀ
//! ```
//!
//! `LᵀL` is `r x r` and positive definite, so the only dense inverse taken is
//! of the rank-sized matrix. Writing `T = L (LᵀL)⁻¹` the Gram pseudoinverse is
//! `T Tᵀ`, which is how it is evaluated here.
//!
//! Forming a Gram matrix squares the condition number of `M`. Inputs whose
//! singular values span more than about half the double-precision range lose
//! accuracy on this path; [`crate::linalg::pinv_svd`] is the fallback.

use crate::error::{Error, Result};
use crate::linalg::cholesky::{full_rank_cholesky, gram, spd_inverse, FullRankCholesky, GramSide, PivotTolerance};
use crate::linalg::DenseMatrix;

/// Which Gram matrix [`pinv_cholesky_with`] factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SideChoice {
    /// The smaller of `MᵀM` and `MMᵀ` (`MᵀM` on ties).
    #[default]
    Smaller,
    Fixed(GramSide),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CholeskyPinvOptions {
    pub tol: PivotTolerance,
    pub side: SideChoice,
}

/// Pseudoinverse of `LLᵀ` from its factor: `L (LᵀL)⁻² Lᵀ`.
pub fn gram_pinv_from_factor(f: &FullRankCholesky) -> Result<DenseMatrix> {
    let q = f.factor.rows();
    if f.rank == 0 {
        return Ok(DenseMatrix::zeros(q, q));
    }
    let ltl = gram(&f.factor, GramSide::Left)?;
    let ltl_inv = spd_inverse(&ltl)?;
    let t = f.factor.matmul(&ltl_inv)?;
    let mut w = t.matmul_transpose(&t)?;
    w.symmetrize();
    Ok(w)
}

/// Pseudoinverse of a symmetric positive semidefinite matrix.
pub fn pinv_psd(a: &DenseMatrix, tol: PivotTolerance) -> Result<DenseMatrix> {
    let f = full_rank_cholesky(a, tol)?;
    gram_pinv_from_factor(&f)
}

/// Moore-Penrose inverse of `M` (`cols x rows`) by full-rank Cholesky.
pub fn pinv_cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    pinv_cholesky_with(m, CholeskyPinvOptions::default())
}

pub fn pinv_cholesky_with(m: &DenseMatrix, opts: CholeskyPinvOptions) -> Result<DenseMatrix> {
    if m.is_empty() {
        return Err(Error::Dimension(format!(
            "pseudoinverse of an empty {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.ensure_finite("pseudoinverse input")?;
    let side = match opts.side {
        SideChoice::Fixed(side) => side,
        SideChoice::Smaller if m.rows() < m.cols() => GramSide::Right,
        SideChoice::Smaller => GramSide::Left,
    };
    let g = gram(m, side)?;
    let inner = match side {
        GramSide::Left => m.rows(),
        GramSide::Right => m.cols(),
    };
    let w = pinv_psd(&g, opts.tol.for_gram(&g, inner))?;
    match side {
        // M† = (MᵀM)† Mᵀ
        GramSide::Left => w.matmul_transpose(m),
        // M† = Mᵀ (MMᵀ)†
        GramSide::Right => m.transpose_matmul(&w),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity() {
        let p = pinv_cholesky(&DenseMatrix::identity(3)).unwrap();
        assert!(p.sub(&DenseMatrix::identity(3)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn zero_matrix() {
        let p = pinv_cholesky(&DenseMatrix::zeros(2, 3)).unwrap();
        assert_eq!(p, DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn rank_one() {
        let a = m(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        let expected = m(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]]).scaled(1.0 / 70.0);
        for side in [GramSide::Left, GramSide::Right] {
            let p = pinv_cholesky_with(
                &a,
                CholeskyPinvOptions {
                    side: SideChoice::Fixed(side),
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(p.sub(&expected).unwrap().max_abs() < 1e-15, "{side:?}: {p:?}");
        }
    }

    #[test]
    fn full_rank_square_is_inverse() {
        let a = m(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let p = pinv_cholesky(&a).unwrap();
        let expected = m(&[&[3.0, -1.0], &[-1.0, 2.0]]).scaled(0.2);
        assert!(p.sub(&expected).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn errors() {
        assert!(matches!(pinv_cholesky(&DenseMatrix::zeros(0, 0)), Err(Error::Dimension(_))));
        let mut bad = DenseMatrix::zeros(2, 2);
        bad.as_mut_slice()[1] = f64::INFINITY;
        assert!(matches!(pinv_cholesky(&bad), Err(Error::NonFinite(_))));
    }
}
