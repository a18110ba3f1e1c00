//! EDMD / DMD: snapshot pairs, operator fitting, spectra and prediction.
//!
//! Given lifted snapshots `Y_p = Ψ(X_p)` and `Y_f = Ψ(X_f)`, the operator is
//! the least-squares solution `K = Y_f Y_p†` of `min ‖K Y_p − Y_f‖_F`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dictionary::DictionarySpec;
use crate::error::{Error, Result};
use crate::ingest;
use crate::linalg::{
    eigenvalues, gram, lstsq_qr, pinv_cholesky_with, pinv_psd, pinv_svd, CholeskyPinvOptions, Complex64,
    DenseMatrix, EigenSpectrum, GramSide, PivotTolerance, Rcond,
};

pub const OPERATOR_FILE: &str = "operator.csv";
pub const DICTIONARY_FILE: &str = "dictionary.json";
pub const METADATA_FILE: &str = "metadata.json";

/// Aligned snapshot matrices: column `i` of `future` follows column `i` of `past`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotPair {
    past: DenseMatrix,
    future: DenseMatrix,
}

impl SnapshotPair {
    pub fn new(past: DenseMatrix, future: DenseMatrix) -> Result<Self> {
        if past.shape() != future.shape() {
            return Err(Error::Shape(format!(
                "snapshot matrices differ in shape: {}x{} vs {}x{}",
                past.rows(),
                past.cols(),
                future.rows(),
                future.cols()
            )));
        }
        if past.cols() == 0 || past.rows() == 0 {
            return Err(Error::Data("snapshot pair needs at least one non-empty column".into()));
        }
        past.ensure_finite("past snapshots")?;
        future.ensure_finite("future snapshots")?;
        Ok(SnapshotPair { past, future })
    }

    /// Consecutive pairs of a `state_dim x (M + 1)` trajectory.
    pub fn from_trajectory(traj: &DenseMatrix) -> Result<Self> {
        snapshots_from_trajectory(traj)
    }

    /// Pairs from several trajectories side by side.
    pub fn concat(pairs: &[SnapshotPair]) -> Result<Self> {
        let (first, rest) = pairs
            .split_first()
            .ok_or_else(|| Error::Data("no snapshot pairs to concatenate".into()))?;
        let mut past = first.past.clone();
        let mut future = first.future.clone();
        for p in rest {
            past = past.hstack(&p.past)?;
            future = future.hstack(&p.future)?;
        }
        SnapshotPair::new(past, future)
    }

    pub fn past(&self) -> &DenseMatrix {
        &self.past
    }

    pub fn future(&self) -> &DenseMatrix {
        &self.future
    }

    pub fn state_dim(&self) -> usize {
        self.past.rows()
    }

    /// Number of pairs `M`.
    pub fn len(&self) -> usize {
        self.past.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.past.cols() == 0
    }
}

/// `X_p` = columns `0..M`, `X_f` = columns `1..=M`.
pub fn snapshots_from_trajectory(traj: &DenseMatrix) -> Result<SnapshotPair> {
    if traj.cols() < 2 {
        return Err(Error::Data(format!(
            "a trajectory needs at least 2 snapshots, got {}",
            traj.cols()
        )));
    }
    let m = traj.cols() - 1;
    SnapshotPair::new(traj.columns(0, m), traj.columns(1, m + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Cholesky,
    Svd,
    Qr,
}

impl FitMethod {
    pub const ALL: [FitMethod; 3] = [FitMethod::Cholesky, FitMethod::Svd, FitMethod::Qr];

    pub fn as_str(self) -> &'static str {
        match self {
            FitMethod::Cholesky => "cholesky",
            FitMethod::Svd => "svd",
            FitMethod::Qr => "qr",
        }
    }
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cholesky" => Ok(FitMethod::Cholesky),
            "svd" => Ok(FitMethod::Svd),
            "qr" => Ok(FitMethod::Qr),
            other => Err(Error::Parameter(format!(
                "unknown fit method {other:?} (expected cholesky, svd or qr)"
            ))),
        }
    }
}

/// How the Cholesky method evaluates `Y_f Y_p†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CholeskyPath {
    /// `(Y_f Y_pᵀ)(Y_p Y_pᵀ)†`; only a `K x K` Gram matrix is factored.
    #[default]
    Gram,
    /// `Y_f · pinv_cholesky(Y_p)`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub method: FitMethod,
    pub cholesky_path: CholeskyPath,
    pub pivot_tol: PivotTolerance,
}

impl FitOptions {
    pub fn new(method: FitMethod) -> Self {
        FitOptions {
            method,
            cholesky_path: CholeskyPath::default(),
            pivot_tol: PivotTolerance::Auto,
        }
    }
}

impl From<FitMethod> for FitOptions {
    fn from(method: FitMethod) -> Self {
        FitOptions::new(method)
    }
}

/// `K` minimizing `‖K Y_p − Y_f‖_F` from already-lifted snapshots.
pub fn solve_operator(yp: &DenseMatrix, yf: &DenseMatrix, opts: FitOptions) -> Result<DenseMatrix> {
    if yp.shape() != yf.shape() {
        return Err(Error::Shape(format!(
            "lifted snapshot matrices differ in shape: {}x{} vs {}x{}",
            yp.rows(),
            yp.cols(),
            yf.rows(),
            yf.cols()
        )));
    }
    match opts.method {
        FitMethod::Cholesky => match opts.cholesky_path {
            CholeskyPath::Gram => {
                let g = gram(yp, GramSide::Right)?;
                let cross = yf.matmul_transpose(yp)?;
                cross.matmul(&pinv_psd(&g, opts.pivot_tol.for_gram(&g, yp.cols()))?)
            }
            CholeskyPath::Direct => {
                let p = pinv_cholesky_with(
                    yp,
                    CholeskyPinvOptions {
                        tol: opts.pivot_tol,
                        ..Default::default()
                    },
                )?;
                yf.matmul(&p)
            }
        },
        FitMethod::Svd => yf.matmul(&pinv_svd(yp, Rcond::Auto)?),
        // Kᵀ = argmin ‖Y_pᵀ Kᵀ − Y_fᵀ‖
        FitMethod::Qr => Ok(lstsq_qr(&yp.transpose(), &yf.transpose())?.transpose()),
    }
}

/// `‖K Y_p − Y_f‖_F / max(‖Y_f‖_F, eps)`.
pub fn relative_residual(k: &DenseMatrix, yp: &DenseMatrix, yf: &DenseMatrix) -> Result<f64> {
    let r = k.matmul(yp)?.sub(yf)?.frobenius_norm();
    Ok(r / yf.frobenius_norm().max(f64::EPSILON))
}

/// A fitted finite-dimensional Koopman operator.
#[derive(Debug, Clone)]
pub struct KoopmanModel {
    operator: DenseMatrix,
    dictionary: DictionarySpec,
    method: FitMethod,
    residual_rel: f64,
    fit_seconds: f64,
    spectrum: OnceLock<EigenSpectrum>,
}

impl KoopmanModel {
    pub fn new(
        operator: DenseMatrix,
        dictionary: DictionarySpec,
        method: FitMethod,
        residual_rel: f64,
        fit_seconds: f64,
    ) -> Result<Self> {
        if !operator.is_square() || operator.rows() != dictionary.output_dim() {
            return Err(Error::Shape(format!(
                "operator is {}x{} but the dictionary has {} features",
                operator.rows(),
                operator.cols(),
                dictionary.output_dim()
            )));
        }
        operator.ensure_finite("Koopman operator")?;
        if !(residual_rel >= 0.0 && residual_rel.is_finite()) {
            return Err(Error::Numeric(format!("fit residual {residual_rel} is not a finite non-negative number")));
        }
        Ok(KoopmanModel {
            operator,
            dictionary,
            method,
            residual_rel,
            fit_seconds,
            spectrum: OnceLock::new(),
        })
    }

    pub fn operator(&self) -> &DenseMatrix {
        &self.operator
    }

    pub fn dictionary(&self) -> &DictionarySpec {
        &self.dictionary
    }

    pub fn method(&self) -> FitMethod {
        self.method
    }

    pub fn residual_rel(&self) -> f64 {
        self.residual_rel
    }

    pub fn fit_seconds(&self) -> f64 {
        self.fit_seconds
    }

    /// Eigenvalues of `K`, computed on first use.
    pub fn spectrum(&self) -> Result<&EigenSpectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = eigenvalues(&self.operator)?;
        // A concurrent caller may have won the race; both values are equal.
        let _ = self.spectrum.set(s);
        Ok(self.spectrum.get().expect("spectrum was just set"))
    }

    /// `[z₀ … z_steps]` with `z₀ = Ψ(x₀)` and `z_{t+1} = K z_t`.
    pub fn predict(&self, x0: &[f64], steps: usize) -> Result<DenseMatrix> {
        if x0.len() != self.dictionary.state_dim() {
            return Err(Error::Shape(format!(
                "initial state has {} entries, the dictionary expects {}",
                x0.len(),
                self.dictionary.state_dim()
            )));
        }
        let z0 = self.dictionary.lift_vector(x0)?;
        let k = self.operator.rows();
        let mut out = DenseMatrix::zeros(k, steps + 1);
        out.set_column(0, &z0);
        let mut z = z0;
        for t in 1..=steps {
            z = self.operator.matvec(&z)?;
            out.set_column(t, &z);
        }
        Ok(out)
    }

    /// Writes `operator.csv`, `dictionary.json` and `metadata.json` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let names: Vec<String> = (0..self.operator.cols()).map(|j| format!("k{j}")).collect();
        ingest::write_csv(dir.join(OPERATOR_FILE), &names, &self.operator)?;
        let dict_path = dir.join(DICTIONARY_FILE);
        fs::write(&dict_path, self.dictionary.to_json()?).map_err(|e| Error::io(&dict_path, e))?;
        let meta = ModelMetadata {
            method: self.method,
            residual_rel: self.residual_rel,
            fit_seconds: self.fit_seconds,
            dimension: self.operator.rows(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let meta_path = dir.join(METADATA_FILE);
        fs::write(&meta_path, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&meta_path, e))?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let table = ingest::read_csv(dir.join(OPERATOR_FILE))?;
        let dict_path = dir.join(DICTIONARY_FILE);
        let dictionary =
            DictionarySpec::from_json(&fs::read_to_string(&dict_path).map_err(|e| Error::io(&dict_path, e))?)?;
        let meta_path = dir.join(METADATA_FILE);
        let meta: ModelMetadata =
            serde_json::from_str(&fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
        if meta.dimension != table.samples.rows() {
            return Err(Error::Data(format!(
                "metadata says dimension {} but the operator has {} rows",
                meta.dimension,
                table.samples.rows()
            )));
        }
        KoopmanModel::new(table.samples, dictionary, meta.method, meta.residual_rel, meta.fit_seconds)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMetadata {
    method: FitMethod,
    residual_rel: f64,
    fit_seconds: f64,
    dimension: usize,
    version: String,
}

/// Fits `K = Y_f Y_p†` with the default options for `method`.
pub fn edmd_fit(pair: &SnapshotPair, dict: &DictionarySpec, method: FitMethod) -> Result<KoopmanModel> {
    edmd_fit_with(pair, dict, FitOptions::new(method))
}

pub fn edmd_fit_with(pair: &SnapshotPair, dict: &DictionarySpec, opts: FitOptions) -> Result<KoopmanModel> {
    if dict.state_dim() != pair.state_dim() {
        return Err(Error::Shape(format!(
            "dictionary expects {}-dimensional states, snapshots are {}-dimensional",
            dict.state_dim(),
            pair.state_dim()
        )));
    }
    let yp = dict.lift(pair.past())?;
    let yf = dict.lift(pair.future())?;
    if !yp.all_finite() || !yf.all_finite() {
        return Err(Error::Data("lifted features contain non-finite values".into()));
    }
    let start = Instant::now();
    let k = solve_operator(&yp, &yf, opts)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let residual = relative_residual(&k, &yp, &yf)?;
    KoopmanModel::new(k, dict.clone(), opts.method, residual, fit_seconds)
}

/// Largest pairing distance between the `top_n` leading eigenvalues of two spectra.
///
/// Each of the first `top_n` values of `a`, in order, is matched to the
/// nearest not-yet-used value among the first `top_n` of `b`.
pub fn compare_spectra(a: &EigenSpectrum, b: &EigenSpectrum, top_n: usize) -> Result<f64> {
    if top_n == 0 {
        return Err(Error::Parameter("top_n must be at least 1".into()));
    }
    if top_n > a.len() || top_n > b.len() {
        return Err(Error::Parameter(format!(
            "top_n = {top_n} exceeds spectrum sizes {} and {}",
            a.len(),
            b.len()
        )));
    }
    let lhs = &a.values()[..top_n];
    let rhs: &[Complex64] = &b.values()[..top_n];
    let mut used = vec![false; top_n];
    let mut worst = 0.0_f64;
    for x in lhs {
        let (j, d) = rhs
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("as many candidates as values");
        used[j] = true;
        worst = worst.max(d);
    }
    Ok(worst)
}
