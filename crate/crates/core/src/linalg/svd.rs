//! Singular values and the SVD-based pseudoinverse.
//!
//! One-sided (Hestenes) Jacobi on the triangular factor of a column-pivoted
//! QR preconditioning step. The matrix is first oriented so that it is wide
//! (`n <= m`); with `Xᵀ P = Q R`, the rows of `Rᵀ` are orthogonalized by plane
//! rotations `G`, giving `G Rᵀ = Y` with mutually orthogonal rows. Then
//! `σᵢ = ‖yᵢ‖` and `(Rᵀ)† = Yᵀ diag(1/σ²) G`.

use crate::error::{Error, Result};
use crate::linalg::cholesky::dot;
use crate::linalg::qr::HouseholderQr;
use crate::linalg::DenseMatrix;

const MAX_SWEEPS: usize = 60;

/// Truncation threshold for [`pinv_svd`], relative to the largest singular value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Rcond {
    /// `max(rows, cols) * eps`.
    #[default]
    Auto,
    Fixed(f64),
}

struct Reduced {
    /// Wide orientation: `x = m` if `rows <= cols`, else `mᵀ`.
    transposed: bool,
    qr: HouseholderQr,
    /// Orthogonal rows after the Jacobi sweeps (`n x n`).
    y: DenseMatrix,
    /// Accumulated rotations (`n x n`).
    g: DenseMatrix,
    sigma: Vec<f64>,
}

fn reduce(m: &DenseMatrix) -> Result<Reduced> {
    if m.is_empty() {
        return Err(Error::Dimension(format!(
            "SVD of an empty {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.ensure_finite("SVD input")?;
    let transposed = m.rows() > m.cols();
    // Rows of `x` are the columns of the tall matrix `xᵀ` that gets factored.
    let x = if transposed { m.transpose() } else { m.clone() };
    let n = x.rows();
    let qr = HouseholderQr::from_columns(x, true);

    // Rᵀ: row i holds column i of R.
    let mut y = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for k in 0..=i {
            y[(i, k)] = qr.r(k, i);
        }
    }
    let mut g = DenseMatrix::identity(n);
    jacobi_rows(&mut y, &mut g)?;
    let sigma = (0..n).map(|i| dot(y.row(i), y.row(i)).sqrt()).collect();
    Ok(Reduced {
        transposed,
        qr,
        y,
        g,
        sigma,
    })
}

/// Orthogonalizes the rows of `y` in place, applying the same rotations to `g`.
fn jacobi_rows(y: &mut DenseMatrix, g: &mut DenseMatrix) -> Result<()> {
    let n = y.rows();
    let tol = f64::EPSILON * (n as f64).sqrt().max(1.0);
    let mut norms = vec![0.0; n];
    for _sweep in 0..MAX_SWEEPS {
        for (i, v) in norms.iter_mut().enumerate() {
            *v = dot(y.row(i), y.row(i));
        }
        // Rows at rounding level relative to the largest one are not rotated.
        let floor = norms.iter().fold(0.0_f64, |a, &b| a.max(b)) * (n as f64 * f64::EPSILON).powi(2);
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let (alpha, beta) = (norms[i], norms[j]);
                if alpha <= floor || beta <= floor {
                    continue;
                }
                let gamma = dot(y.row(i), y.row(j));
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(y, i, j, c, s);
                rotate(g, i, j, c, s);
                norms[i] = alpha - t * gamma;
                norms[j] = beta + t * gamma;
            }
        }
        if !rotated {
            return Ok(());
        }
    }
    Err(Error::Numeric(format!(
        "Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
    )))
}

#[inline]
fn rotate(m: &mut DenseMatrix, i: usize, j: usize, c: f64, s: f64) {
    let cols = m.cols();
    let (head, tail) = m.as_mut_slice().split_at_mut(j * cols);
    let ri = &mut head[i * cols..(i + 1) * cols];
    let rj = &mut tail[..cols];
    for (a, b) in ri.iter_mut().zip(rj.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = c * u - s * v;
        *b = s * u + c * v;
    }
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &DenseMatrix) -> Result<Vec<f64>> {
    let mut s = reduce(m)?.sigma;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Moore-Penrose inverse via the singular value decomposition.
///
/// Singular values at or below `rcond * σ_max` are treated as zero.
pub fn pinv_svd(m: &DenseMatrix, rcond: Rcond) -> Result<DenseMatrix> {
    let red = reduce(m)?;
    let n = red.y.rows();
    let mm = red.qr.nrows();
    let sigma_max = red.sigma.iter().copied().fold(0.0_f64, f64::max);
    let rel = match rcond {
        Rcond::Auto => m.rows().max(m.cols()) as f64 * f64::EPSILON,
        Rcond::Fixed(r) if r >= 0.0 && r.is_finite() => r,
        Rcond::Fixed(r) => return Err(Error::Parameter(format!("rcond {r} is invalid"))),
    };
    let cutoff = rel * sigma_max;

    // (Rᵀ)†ᵀ = Gᵀ diag(1/σ²) Y, built row by row of the kept terms.
    let mut zt = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let s = red.sigma[i];
        if !(s > cutoff) {
            continue;
        }
        let w = 1.0 / (s * s);
        let gi = red.g.row(i);
        let yi = red.y.row(i);
        for b in 0..n {
            let coef = gi[b] * w;
            if coef == 0.0 {
                continue;
            }
            for (z, &yv) in zt.row_mut(b).iter_mut().zip(yi) {
                *z += coef * yv;
            }
        }
    }

    // x† = Q (Rᵀ)† Pᵀ. Column b of Q (Rᵀ)† lands in column perm[b] of x†,
    // i.e. row perm[b] of x†ᵀ.
    let perm = red.qr.permutation();
    let mut xt_pinv = DenseMatrix::zeros(n, mm);
    let mut col = vec![0.0; mm];
    for b in 0..n {
        col[..n].copy_from_slice(zt.row(b));
        col[n..].fill(0.0);
        red.qr.apply_q(&mut col);
        xt_pinv.row_mut(perm[b]).copy_from_slice(&col);
    }

    // x† is (mm x n); m† = x† when m was not transposed, else (x†)ᵀ.
    Ok(if red.transposed {
        xt_pinv
    } else {
        xt_pinv.transpose()
    })
}
