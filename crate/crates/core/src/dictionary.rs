//! Observables that lift state snapshots into feature space.
//!
//! Matrices are column-per-snapshot: a `state_dim x M` input lifts to a
//! `features x M` output, column by column.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Largest column subsample used by the median-distance bandwidth rule.
pub const MEDIAN_SUBSAMPLE_CAP: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DictionarySpec {
    /// `Ψ(x) = x`; plain DMD.
    Identity { state_dim: usize },
    /// `ψ_c(x) = exp(-‖x - c‖² / (2σ²))`, one feature per center column.
    GaussianRbf {
        centers: DenseMatrix,
        sigma: f64,
        /// Appends the raw state coordinates after the RBF features.
        #[serde(default)]
        include_state: bool,
        /// Seed the centers were drawn with, if they were sampled.
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// Median pairwise distance over at most [`MEDIAN_SUBSAMPLE_CAP`] columns.
    MedianHeuristic,
    Explicit(f64),
}

impl DictionarySpec {
    pub fn identity(state_dim: usize) -> Self {
        DictionarySpec::Identity { state_dim }
    }

    pub fn gaussian_rbf(centers: DenseMatrix, sigma: f64, include_state: bool) -> Result<Self> {
        let spec = DictionarySpec::GaussianRbf {
            centers,
            sigma,
            include_state,
            seed: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DictionarySpec::Identity { .. } => Ok(()),
            DictionarySpec::GaussianRbf { centers, sigma, .. } => {
                if !(*sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::Parameter(format!("RBF bandwidth must be positive, got {sigma}")));
                }
                if centers.cols() == 0 || centers.rows() == 0 {
                    return Err(Error::Parameter("RBF dictionary needs at least one center".into()));
                }
                centers.ensure_finite("RBF centers")
            }
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            DictionarySpec::Identity { state_dim } => *state_dim,
            DictionarySpec::GaussianRbf { centers, .. } => centers.rows(),
        }
    }

    /// Number of features `Ψ` produces.
    pub fn output_dim(&self) -> usize {
        match self {
            DictionarySpec::Identity { state_dim } => *state_dim,
            DictionarySpec::GaussianRbf {
                centers,
                include_state,
                ..
            } => centers.cols() + if *include_state { centers.rows() } else { 0 },
        }
    }

    /// `[Ψ(x₁) … Ψ(x_M)]` for the columns `xⱼ` of `x`.
    pub fn lift(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.validate()?;
        if x.rows() != self.state_dim() {
            return Err(Error::Shape(format!(
                "dictionary expects {}-dimensional states, data has {} rows",
                self.state_dim(),
                x.rows()
            )));
        }
        match self {
            DictionarySpec::Identity { .. } => Ok(x.clone()),
            DictionarySpec::GaussianRbf {
                centers,
                sigma,
                include_state,
                ..
            } => {
                let k = centers.cols();
                let m = x.cols();
                let inv = 1.0 / (2.0 * sigma * sigma);
                let ct = centers.transpose();
                let xt = x.transpose();
                let mut out = DenseMatrix::zeros(self.output_dim(), m);
                for c in 0..k {
                    let center = ct.row(c);
                    let row = out.row_mut(c);
                    for (j, v) in row.iter_mut().enumerate() {
                        let d2: f64 = xt
                            .row(j)
                            .iter()
                            .zip(center)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum();
                        *v = (-d2 * inv).exp();
                    }
                }
                if *include_state {
                    for i in 0..x.rows() {
                        out.row_mut(k + i).copy_from_slice(x.row(i));
                    }
                }
                Ok(out)
            }
        }
    }

    /// `Ψ(x)` for a single state vector.
    pub fn lift_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let col = DenseMatrix::column_vector(x)?;
        Ok(self.lift(&col)?.into_vec())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: DictionarySpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Gaussian RBF dictionary with `count` centers drawn from the columns of `x`.
///
/// Centers are distinct column indices sampled uniformly without replacement
/// from a ChaCha8 stream seeded with `seed`; the same inputs always give the
/// same dictionary.
pub fn build_rbf_centers(
    x: &DenseMatrix,
    count: usize,
    seed: u64,
    bandwidth: BandwidthRule,
) -> Result<DictionarySpec> {
    if count == 0 {
        return Err(Error::Parameter("RBF center count must be at least 1".into()));
    }
    if count > x.cols() {
        return Err(Error::Parameter(format!(
            "{count} RBF centers requested from {} snapshots",
            x.cols()
        )));
    }
    x.ensure_finite("RBF training data")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, x.cols(), count).into_vec();
    let mut centers = DenseMatrix::zeros(x.rows(), count);
    for (c, &j) in picks.iter().enumerate() {
        centers.set_column(c, &x.column(j));
    }
    let sigma = match bandwidth {
        BandwidthRule::Explicit(s) => s,
        BandwidthRule::MedianHeuristic => median_pairwise_distance(x, &mut rng)?,
    };
    let spec = DictionarySpec::GaussianRbf {
        centers,
        sigma,
        include_state: false,
        seed: Some(seed),
    };
    spec.validate()?;
    Ok(spec)
}

fn median_pairwise_distance(x: &DenseMatrix, rng: &mut ChaCha8Rng) -> Result<f64> {
    let cols: Vec<usize> = if x.cols() <= MEDIAN_SUBSAMPLE_CAP {
        (0..x.cols()).collect()
    } else {
        sample(rng, x.cols(), MEDIAN_SUBSAMPLE_CAP).into_vec()
    };
    if cols.len() < 2 {
        return Err(Error::Parameter(
            "median bandwidth needs at least two snapshots".into(),
        ));
    }
    let xt = x.transpose();
    let mut dists = Vec::with_capacity(cols.len() * (cols.len() - 1) / 2);
    for (a, &i) in cols.iter().enumerate() {
        for &j in &cols[a + 1..] {
            let d2: f64 = xt
                .row(i)
                .iter()
                .zip(xt.row(j))
                .map(|(p, q)| (p - q) * (p - q))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    let median = median(&mut dists);
    if !(median > 0.0) {
        return Err(Error::Parameter(
            "median pairwise distance is zero; give an explicit bandwidth".into(),
        ));
    }
    Ok(median)
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
