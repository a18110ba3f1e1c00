//! Dense real linear algebra: the matrix type, Gram matrices, rank-revealing
//! Cholesky, pseudoinverses, least squares and eigenvalues.

mod cholesky;
mod eigen;
mod matrix;
mod pinv;
mod qr;
mod svd;

pub use cholesky::{
    full_rank_cholesky, gram, spd_inverse, FullRankCholesky, GramSide, PivotTolerance, SYMMETRY_TOL,
};
pub use eigen::{eigenvalues, spectral_order, EigenSpectrum};
pub use matrix::DenseMatrix;
pub use pinv::{
    gram_pinv_from_factor, pinv_cholesky, pinv_cholesky_with, pinv_psd, CholeskyPinvOptions, SideChoice,
};
pub use qr::{lstsq_qr, HouseholderQr};
pub use svd::{pinv_svd, singular_values, Rcond};

pub use num_complex::Complex64;
