//! Ring network of damped, linearly coupled second-order oscillators.
//!
//! Each node obeys `θ̈_k = −(𝓛θ)_k − d·θ̇_k` where `𝓛` is the weighted ring
//! Laplacian. The state is `x = (θ₁…θ_N, θ̇₁…θ̇_N)` and the system is
//! integrated with fixed-step RK4, which for a linear system is exactly the
//! matrix `A_d = I + hA + (hA)²/2 + (hA)³/6 + (hA)⁴/24`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::TimeSeriesTable;
use crate::koopman::SnapshotPair;
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingNetworkConfig {
    pub oscillators: usize,
    pub damping: f64,
    pub edge_weight: f64,
    pub dt: f64,
}

impl RingNetworkConfig {
    pub fn new(oscillators: usize) -> Self {
        RingNetworkConfig {
            oscillators,
            damping: 0.4,
            edge_weight: 1.0,
            dt: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.oscillators < 3 {
            return Err(Error::Parameter(format!(
                "a ring needs at least 3 oscillators, got {}",
                self.oscillators
            )));
        }
        if !(self.damping >= 0.0 && self.damping.is_finite()) {
            return Err(Error::Parameter(format!("damping must be >= 0, got {}", self.damping)));
        }
        if !(self.edge_weight > 0.0 && self.edge_weight.is_finite()) {
            return Err(Error::Parameter(format!("edge weight must be > 0, got {}", self.edge_weight)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Parameter(format!("dt must be > 0, got {}", self.dt)));
        }
        Ok(())
    }

    /// Length of the state vector, `2N`.
    pub fn state_dim(&self) -> usize {
        2 * self.oscillators
    }
}

/// `2N x T` states with rows `[θ₁…θ_N, θ̇₁…θ̇_N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: DenseMatrix,
    pub dt: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.states.cols() == 0
    }

    pub fn snapshots(&self) -> Result<SnapshotPair> {
        SnapshotPair::from_trajectory(&self.states)
    }

    /// One row per sample with columns `t, theta_1…theta_N, omega_1…omega_N`.
    pub fn to_table(&self) -> Result<TimeSeriesTable> {
        let n = self.states.rows() / 2;
        let names = (1..=n)
            .map(|k| format!("theta_{k}"))
            .chain((1..=n).map(|k| format!("omega_{k}")))
            .collect();
        let mut table = TimeSeriesTable::new(names, self.states.transpose())?;
        table.times = Some((0..self.len()).map(|t| t as f64 * self.dt).collect());
        table.dt_hint = Some(self.dt);
        Ok(table)
    }
}

/// `N x N` ring Laplacian: `2w` on the diagonal, `−w` on cyclic neighbours.
pub fn ring_laplacian(n: usize, w: f64) -> Result<DenseMatrix> {
    if n < 3 {
        return Err(Error::Parameter(format!("a ring needs at least 3 nodes, got {n}")));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Parameter(format!("edge weight must be > 0, got {w}")));
    }
    let mut l = DenseMatrix::zeros(n, n);
    for k in 0..n {
        l[(k, k)] = 2.0 * w;
        l[(k, (k + 1) % n)] = -w;
        l[(k, (k + n - 1) % n)] = -w;
    }
    Ok(l)
}

/// `A_c = [[0, I], [−𝓛, −d·I]]`.
pub fn continuous_state_matrix(cfg: &RingNetworkConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let n = cfg.oscillators;
    let l = ring_laplacian(n, cfg.edge_weight)?;
    let mut a = DenseMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
        for j in 0..n {
            a[(n + i, j)] = -l[(i, j)];
        }
        a[(n + i, n + i)] = -cfg.damping;
    }
    Ok(a)
}

/// The matrix of one RK4 step of size `h` for `ẋ = A x`, built column by column.
pub fn rk4_step_matrix(a: &DenseMatrix, h: f64) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::Shape(format!("state matrix must be square, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let mut out = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for k in 0..n {
        e[k] = 1.0;
        let col = rk4_step(&e, h, |x, dx| {
            let y = a.matvec(x).expect("square matrix");
            dx.copy_from_slice(&y);
        });
        out.set_column(k, &col);
        e[k] = 0.0;
    }
    Ok(out)
}

/// Exact discrete map `A_d` of one RK4 step on the ring network.
pub fn one_step_map(cfg: &RingNetworkConfig) -> Result<DenseMatrix> {
    cfg.validate()?;
    let dim = cfg.state_dim();
    let mut out = DenseMatrix::zeros(dim, dim);
    let mut e = vec![0.0; dim];
    for k in 0..dim {
        e[k] = 1.0;
        let col = rk4_step(&e, cfg.dt, |s, ds| ring_derivative(cfg, s, ds));
        out.set_column(k, &col);
        e[k] = 0.0;
    }
    Ok(out)
}

/// Integrates `steps` RK4 steps from `x0`, or from `θ ~ U[−π, π]`, `θ̇ = 0`
/// drawn with `seed` when `x0` is `None`.
pub fn simulate(cfg: &RingNetworkConfig, x0: Option<&[f64]>, steps: usize, seed: Option<u64>) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.oscillators;
    let x0 = match x0 {
        Some(x) => {
            if x.len() != 2 * n {
                return Err(Error::Shape(format!(
                    "initial state has {} entries, expected {}",
                    x.len(),
                    2 * n
                )));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial state".into()));
            }
            x.to_vec()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
            let mut x = vec![0.0; 2 * n];
            for v in &mut x[..n] {
                *v = rng.random_range(-PI..=PI);
            }
            x
        }
    };
    integrate(cfg, x0, steps)
}

fn integrate(cfg: &RingNetworkConfig, x0: Vec<f64>, steps: usize) -> Result<Trajectory> {
    let dim = x0.len();
    let mut states = DenseMatrix::zeros(dim, steps + 1);
    states.set_column(0, &x0);
    let mut x = x0;
    for t in 1..=steps {
        x = rk4_step(&x, cfg.dt, |s, ds| ring_derivative(cfg, s, ds));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("simulation diverged at step {t}")));
        }
        states.set_column(t, &x);
    }
    Ok(Trajectory { states, dt: cfg.dt })
}

/// `ẋ` for the ring network without forming `A_c`.
fn ring_derivative(cfg: &RingNetworkConfig, x: &[f64], dx: &mut [f64]) {
    let n = cfg.oscillators;
    let (theta, omega) = x.split_at(n);
    let (dtheta, domega) = dx.split_at_mut(n);
    dtheta.copy_from_slice(omega);
    let w = cfg.edge_weight;
    for k in 0..n {
        let prev = theta[(k + n - 1) % n];
        let next = theta[(k + 1) % n];
        let lap = w * (2.0 * theta[k] - prev - next);
        domega[k] = -lap - cfg.damping * omega[k];
    }
}

fn rk4_step(x: &[f64], h: f64, f: impl Fn(&[f64], &mut [f64])) -> Vec<f64> {
    let n = x.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    f(&tmp, &mut k4);
    (0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Snapshot pairs from `runs` independent trajectories of `steps` steps each.
///
/// Every run starts from angles and velocities drawn uniformly from
/// `[−π, π]`. A single run from rest only reaches a low-dimensional Krylov
/// subspace of the symmetric ring, so exact recovery of `A_d` needs the
/// richer excitation of an ensemble.
pub fn ensemble_snapshots(cfg: &RingNetworkConfig, runs: usize, steps: usize, seed: u64) -> Result<SnapshotPair> {
    cfg.validate()?;
    if runs == 0 || steps == 0 {
        return Err(Error::Parameter(format!(
            "ensemble needs at least one run and one step, got {runs} runs of {steps} steps"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = cfg.state_dim();
    let mut pairs = Vec::with_capacity(runs);
    for _ in 0..runs {
        let x0: Vec<f64> = (0..dim).map(|_| rng.random_range(-PI..=PI)).collect();
        pairs.push(integrate(cfg, x0, steps)?.snapshots()?);
    }
    SnapshotPair::concat(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, full_rank_cholesky, PivotTolerance};

    #[test]
    fn laplacian_examples() {
        let l = ring_laplacian(3, 1.0).unwrap();
        assert_eq!(
            l,
            DenseMatrix::from_rows(&[[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]]).unwrap()
        );
        for n in [3, 4, 7, 20] {
            let l = ring_laplacian(n, 1.5).unwrap();
            for i in 0..n {
                assert_eq!(l.row(i).iter().sum::<f64>(), 0.0);
            }
            assert_eq!(l.asymmetry(), 0.0);
            assert!(full_rank_cholesky(&l, PivotTolerance::Auto).is_ok());
        }
        let ev = eigenvalues(&ring_laplacian(4, 2.0).unwrap()).unwrap();
        let mut re: Vec<f64> = ev.values().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (got, want) in re.iter().zip([0.0, 4.0, 4.0, 8.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!(matches!(ring_laplacian(2, 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn state_matrix_blocks() {
        let cfg = RingNetworkConfig {
            damping: 0.0,
            ..RingNetworkConfig::new(3)
        };
        let a = continuous_state_matrix(&cfg).unwrap();
        let l = ring_laplacian(3, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a[(i, 3 + j)], if i == j { 1.0 } else { 0.0 });
                assert_eq!(a[(3 + i, j)], -l[(i, j)]);
            }
        }
        let cfg = RingNetworkConfig::new(5);
        assert!((continuous_state_matrix(&cfg).unwrap().trace() + 5.0 * 0.4).abs() < 1e-15);
    }

    #[test]
    fn consensus_eigenvalues() {
        let a = continuous_state_matrix(&RingNetworkConfig::new(3)).unwrap();
        let ev = eigenvalues(&a).unwrap();
        assert!(ev.values().iter().all(|z| z.re <= 1e-12));
        let near = |target: f64| ev.values().iter().filter(|z| (z.re - target).abs() < 1e-9 && z.im.abs() < 1e-9).count();
        assert_eq!(near(0.0), 1);
        assert_eq!(near(-0.4), 1);
    }

    #[test]
    fn scalar_rk4_map() {
        let a = DenseMatrix::from_diagonal(&[-1.0]);
        let ad = rk4_step_matrix(&a, 0.01).unwrap();
        let h: f64 = -0.01;
        let taylor = 1.0 + h + h * h / 2.0 + h.powi(3) / 6.0 + h.powi(4) / 24.0;
        assert!((ad[(0, 0)] - taylor).abs() < 1e-16);
        assert!((ad[(0, 0)] - 0.990_049_833_7).abs() < 1e-10);
        assert_eq!(rk4_step_matrix(&DenseMatrix::zeros(3, 3), 0.3).unwrap(), DenseMatrix::identity(3));
    }

    #[test]
    fn map_matches_taylor_polynomial() {
        let cfg = RingNetworkConfig::new(4);
        let ha = continuous_state_matrix(&cfg).unwrap().scaled(cfg.dt);
        let mut term = DenseMatrix::identity(8);
        let mut sum = term.clone();
        for k in 1..=4 {
            term = term.matmul(&ha).unwrap().scaled(1.0 / k as f64);
            sum = sum.add(&term).unwrap();
        }
        assert!(one_step_map(&cfg).unwrap().sub(&sum).unwrap().max_abs() < 1e-15);
        let generic = rk4_step_matrix(&continuous_state_matrix(&cfg).unwrap(), cfg.dt).unwrap();
        assert!(one_step_map(&cfg).unwrap().sub(&generic).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn map_matches_simulation_from_basis_vectors() {
        let cfg = RingNetworkConfig::new(4);
        let ad = one_step_map(&cfg).unwrap();
        for k in 0..8 {
            let mut e = vec![0.0; 8];
            e[k] = 1.0;
            let traj = simulate(&cfg, Some(&e), 1, None).unwrap();
            let diff: f64 = traj
                .states
                .column(1)
                .iter()
                .zip(ad.column(k))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert_eq!(diff, 0.0, "basis vector {k}");
        }
    }

    #[test]
    fn simulation_examples() {
        let cfg = RingNetworkConfig::new(6);
        let x0: Vec<f64> = (0..12).map(|i| i as f64 * 0.1).collect();
        let t = simulate(&cfg, Some(&x0), 0, None).unwrap();
        assert_eq!(t.states.shape(), (12, 1));
        assert_eq!(t.states.column(0), x0);

        let mut rest = vec![0.7; 6];
        rest.extend([0.0; 6]);
        let t = simulate(&cfg, Some(&rest), 200, None).unwrap();
        for j in 0..t.len() {
            assert_eq!(t.states.column(j), rest);
        }

        let t = simulate(&cfg, None, 5000, Some(3)).unwrap();
        let disagreement = |col: Vec<f64>| {
            let mean = col[..6].iter().sum::<f64>() / 6.0;
            col[..6].iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt()
                + col[6..].iter().map(|v| v * v).sum::<f64>().sqrt()
        };
        assert!(disagreement(t.states.column(5000)) < disagreement(t.states.column(0)));
    }

    #[test]
    fn seeded_initial_conditions() {
        let cfg = RingNetworkConfig::new(5);
        let a = simulate(&cfg, None, 3, Some(9)).unwrap();
        let b = simulate(&cfg, None, 3, Some(9)).unwrap();
        assert_eq!(a, b);
        let x0 = a.states.column(0);
        assert!(x0[..5].iter().all(|v| v.abs() <= PI));
        assert!(x0[5..].iter().all(|v| *v == 0.0));
        assert_ne!(a, simulate(&cfg, None, 3, Some(10)).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            RingNetworkConfig::new(2),
            RingNetworkConfig { damping: -1.0, ..RingNetworkConfig::new(3) },
            RingNetworkConfig { edge_weight: 0.0, ..RingNetworkConfig::new(3) },
            RingNetworkConfig { dt: 0.0, ..RingNetworkConfig::new(3) },
        ];
        for cfg in bad {
            assert!(matches!(simulate(&cfg, None, 1, None), Err(Error::Parameter(_))));
        }
        assert!(matches!(
            simulate(&RingNetworkConfig::new(3), Some(&[0.0; 5]), 1, None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn table_layout() {
        let t = simulate(&RingNetworkConfig::new(3), None, 4, Some(1)).unwrap();
        let table = t.to_table().unwrap();
        assert_eq!(table.column_names[0], "theta_1");
        assert_eq!(table.column_names[5], "omega_3");
        assert_eq!(table.samples.shape(), (5, 6));
        assert_eq!(table.times.as_ref().unwrap()[2], 0.02);
    }

    #[test]
    fn ensemble_shape() {
        let cfg = RingNetworkConfig::new(3);
        let p = ensemble_snapshots(&cfg, 4, 5, 0).unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p.state_dim(), 6);
        assert!(ensemble_snapshots(&cfg, 0, 5, 0).is_err());
    }
}
