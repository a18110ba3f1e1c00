use koopman_core::linalg::{
    full_rank_cholesky, gram, lstsq_qr, pinv_cholesky, pinv_cholesky_with, pinv_svd, CholeskyPinvOptions,
    DenseMatrix, GramSide, PivotTolerance, Rcond, SideChoice,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Orthonormal `n x k` columns by twice-repeated Gram-Schmidt.
fn orthonormal(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..n).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let d: f64 = cols[j].iter().zip(&cols[i]).map(|(a, b)| a * b).sum();
                let ci = cols[i].clone();
                cols[j].iter_mut().zip(&ci).for_each(|(a, b)| *a -= d * b);
            }
            let norm = cols[j].iter().map(|a| a * a).sum::<f64>().sqrt();
            cols[j].iter_mut().for_each(|a| *a /= norm);
        }
    }
    DenseMatrix::from_fn(n, k, |i, j| cols[j][i])
}

/// `rows x cols` of rank `rank` with singular values in `[0.1, 10]`.
fn conditioned(rows: usize, cols: usize, rank: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = orthonormal(rows, rank, &mut rng);
    let v = orthonormal(cols, rank, &mut rng);
    let s: Vec<f64> = (0..rank).map(|_| rng.random_range(0.1..10.0)).collect();
    let us = DenseMatrix::from_fn(rows, rank, |i, j| u[(i, j)] * s[j]);
    us.matmul_transpose(&v).unwrap()
}

fn fro(m: &DenseMatrix) -> f64 {
    m.frobenius_norm()
}

fn dims() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=40, 1usize..=40)
        .prop_flat_map(|(r, c)| (Just(r), Just(c), 1..=r.min(c), any::<u64>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penrose_conditions((rows, cols, rank, seed) in dims()) {
        let m = conditioned(rows, cols, rank, seed);
        let p = pinv_cholesky(&m).unwrap();
        prop_assert_eq!(p.shape(), (cols, rows));
        let mp = m.matmul(&p).unwrap();
        let pm = p.matmul(&m).unwrap();
        prop_assert!(fro(&mp.matmul(&m).unwrap().sub(&m).unwrap()) <= 1e-8 * (1.0 + fro(&m)));
        prop_assert!(fro(&pm.matmul(&p).unwrap().sub(&p).unwrap()) <= 1e-8 * (1.0 + fro(&p)));
        prop_assert!(fro(&mp.sub(&mp.transpose()).unwrap()) <= 1e-8);
        prop_assert!(fro(&pm.sub(&pm.transpose()).unwrap()) <= 1e-8);
        let svd = pinv_svd(&m, Rcond::Auto).unwrap();
        prop_assert!(fro(&p.sub(&svd).unwrap()) <= 1e-7 * (1.0 + fro(&svd)));
    }

    #[test]
    fn gram_sides_agree((rows, cols, rank, seed) in dims()) {
        let m = conditioned(rows, cols, rank, seed);
        let side = |s| pinv_cholesky_with(&m, CholeskyPinvOptions {
            side: SideChoice::Fixed(s),
            ..Default::default()
        }).unwrap();
        let left = side(GramSide::Left);
        let right = side(GramSide::Right);
        prop_assert!(fro(&left.sub(&right).unwrap()) <= 1e-7 * fro(&left).max(1.0));
    }

    #[test]
    fn factor_reconstructs_gram((rows, cols, rank, seed) in dims()) {
        let m = conditioned(rows, cols, rank, seed);
        let a = gram(&m, GramSide::Left).unwrap();
        let f = full_rank_cholesky(&a, PivotTolerance::Auto.for_gram(&a, rows)).unwrap();
        prop_assert_eq!(f.rank, rank);
        prop_assert!(fro(&f.reconstruct().sub(&a).unwrap()) <= 1e-9 * (1.0 + fro(&a)));
        for (c, &row) in f.pivot_rows.iter().enumerate() {
            prop_assert!(f.factor[(row, c)] > 0.0);
            for later in c + 1..f.rank {
                prop_assert_eq!(f.factor[(row, later)], 0.0);
            }
        }
    }

    #[test]
    fn qr_is_a_least_squares_minimizer((rows, cols, rank, seed) in dims(), k in 1usize..4) {
        let a = conditioned(rows, cols, rank, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let b = DenseMatrix::from_fn(rows, k, |_, _| StandardNormal.sample(&mut rng));
        let x = lstsq_qr(&a, &b).unwrap();
        let x_svd = pinv_svd(&a, Rcond::Auto).unwrap().matmul(&b).unwrap();
        let r = fro(&a.matmul(&x).unwrap().sub(&b).unwrap());
        let r_svd = fro(&a.matmul(&x_svd).unwrap().sub(&b).unwrap());
        prop_assert!(r <= r_svd + 1e-9, "qr residual {} vs svd {}", r, r_svd);
    }

    #[test]
    fn transpose_swaps_products((rows, cols, _rank, seed) in dims()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng));
        let b = DenseMatrix::from_fn(cols, rows, |_, _| StandardNormal.sample(&mut rng));
        let ab_t = a.matmul(&b).unwrap().transpose();
        let bt_at = b.transpose().matmul(&a.transpose()).unwrap();
        prop_assert!(fro(&ab_t.sub(&bt_at).unwrap()) <= 1e-12 * (1.0 + fro(&ab_t)));
    }
}

#[test]
fn pinv_examples() {
    let m = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
    let expected = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]).unwrap().scaled(1.0 / 70.0);
    for p in [pinv_cholesky(&m).unwrap(), pinv_svd(&m, Rcond::Auto).unwrap()] {
        assert!(p.sub(&expected).unwrap().max_abs() < 1e-15);
    }
    assert_eq!(pinv_cholesky(&DenseMatrix::zeros(2, 3)).unwrap(), DenseMatrix::zeros(3, 2));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = DenseMatrix::from_fn(150, 400, |_, _| StandardNormal.sample(&mut rng));
    let run = |t| koopman_core::with_threads(t, || pinv_cholesky(&m).unwrap()).unwrap();
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(3));
}

