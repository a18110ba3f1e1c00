//! Timing harness comparing the three operator solvers.
//!
//! Each scenario generates (or loads) one problem per size, then times every
//! requested method on it: warmup runs are discarded and the median, minimum
//! and maximum of the timed repetitions are kept. Only the solve itself is
//! timed. Every timed result is checked for correctness in the same run.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dictionary::{build_rbf_centers, BandwidthRule, DictionarySpec};
use crate::error::{Error, Result};
use crate::ingest::{self, format_f64};
use crate::koopman::{compare_spectra, relative_residual, solve_operator, FitMethod, FitOptions};
use crate::linalg::{eigenvalues, lstsq_qr, pinv_cholesky, pinv_svd, DenseMatrix, EigenSpectrum, Rcond};
use crate::oscillator::{ensemble_snapshots, one_step_map, RingNetworkConfig};
use crate::with_threads;

/// Number of leading eigenvalues compared against the SVD fit.
pub const SPECTRUM_TOP_N: usize = 20;
/// Relative Penrose residual accepted for `pinv_random`.
pub const PINV_CHECK_TOL: f64 = 1e-8;
/// Relative operator error accepted for `oscillator_edmd`.
pub const RECOVERY_TOL: f64 = 1e-6;
/// Fit residual accepted for `oscillator_edmd`.
pub const OSCILLATOR_RESIDUAL_TOL: f64 = 1e-9;
/// Header of the benchmark report CSV.
pub const REPORT_COLUMNS: [&str; 12] = [
    "scenario_id",
    "size",
    "method_id",
    "median_seconds",
    "min_seconds",
    "max_seconds",
    "residual_rel",
    "spectrum_gap_vs_svd",
    "size_cols",
    "size_rank",
    "threads",
    "check_passed",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    PinvRandom,
    OscillatorEdmd,
    CsvEdmd,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::PinvRandom => "pinv_random",
            Scenario::OscillatorEdmd => "oscillator_edmd",
            Scenario::CsvEdmd => "csv_edmd",
        }
    }

    /// Numeric code used in the CSV report.
    pub fn id(self) -> u8 {
        match self {
            Scenario::PinvRandom => 0,
            Scenario::OscillatorEdmd => 1,
            Scenario::CsvEdmd => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        [Scenario::PinvRandom, Scenario::OscillatorEdmd, Scenario::CsvEdmd]
            .into_iter()
            .find(|s| s.id() == id)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pinv_random" => Ok(Scenario::PinvRandom),
            "oscillator_edmd" => Ok(Scenario::OscillatorEdmd),
            "csv_edmd" => Ok(Scenario::CsvEdmd),
            other => Err(Error::Parameter(format!(
                "unknown scenario {other:?} (expected pinv_random, oscillator_edmd or csv_edmd)"
            ))),
        }
    }
}

fn method_id(m: FitMethod) -> u8 {
    match m {
        FitMethod::Cholesky => 0,
        FitMethod::Svd => 1,
        FitMethod::Qr => 2,
    }
}

fn method_from_id(id: u8) -> Option<FitMethod> {
    FitMethod::ALL.into_iter().find(|m| method_id(*m) == id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemSize {
    /// A random `rows x cols` matrix of rank `rank`.
    Matrix { rows: usize, cols: usize, rank: usize },
    /// Ring network with this many oscillators.
    Oscillators(usize),
    /// Number of CSV rows in the snapshot window.
    Window(usize),
}

impl ProblemSize {
    /// Parses one size for `scenario`: `ROWSxCOLSxRANK` for matrices, a count otherwise.
    pub fn parse(scenario: Scenario, text: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("invalid size {text:?} for scenario {scenario}"));
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        match scenario {
            Scenario::PinvRandom => {
                let parts: Vec<&str> = text.split(['x', 'X', ':']).collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                Ok(ProblemSize::Matrix {
                    rows: num(parts[0])?,
                    cols: num(parts[1])?,
                    rank: num(parts[2])?,
                })
            }
            Scenario::OscillatorEdmd => Ok(ProblemSize::Oscillators(num(text)?)),
            Scenario::CsvEdmd => Ok(ProblemSize::Window(num(text)?)),
        }
    }

    /// Leading size figure: rows, oscillators or window length.
    pub fn primary(&self) -> usize {
        match *self {
            ProblemSize::Matrix { rows, .. } => rows,
            ProblemSize::Oscillators(n) => n,
            ProblemSize::Window(n) => n,
        }
    }

    fn matches(&self, scenario: Scenario) -> bool {
        matches!(
            (self, scenario),
            (ProblemSize::Matrix { .. }, Scenario::PinvRandom)
                | (ProblemSize::Oscillators(_), Scenario::OscillatorEdmd)
                | (ProblemSize::Window(_), Scenario::CsvEdmd)
        )
    }
}

impl fmt::Display for ProblemSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSize::Matrix { rows, cols, rank } => write!(f, "{rows}x{cols}x{rank}"),
            ProblemSize::Oscillators(n) | ProblemSize::Window(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub sizes: Vec<ProblemSize>,
    pub methods: Vec<FitMethod>,
    pub repetitions: usize,
    pub warmup: usize,
    pub seed: u64,
    /// RBF dictionary size for `csv_edmd`; identity dictionary when absent.
    pub rbf_count: Option<usize>,
    /// Multiplier on the median-distance RBF bandwidth.
    pub rbf_sigma_scale: f64,
    /// Input file for `csv_edmd`.
    pub data: Option<PathBuf>,
    /// First CSV row of every `csv_edmd` window.
    pub window_start: usize,
    /// Snapshot pairs per `oscillator_edmd` problem.
    pub oscillator_steps: usize,
    /// Steps per trajectory in the `oscillator_edmd` ensemble.
    pub burst_length: usize,
    pub threads: usize,
    /// Largest matrix (in elements) a method may need; larger rows are skipped.
    pub max_elements: usize,
}

impl BenchConfig {
    pub fn new(scenario: Scenario, sizes: Vec<ProblemSize>, methods: Vec<FitMethod>) -> Self {
        BenchConfig {
            scenario,
            sizes,
            methods,
            repetitions: 5,
            warmup: 1,
            seed: 0,
            rbf_count: None,
            rbf_sigma_scale: 1.0,
            data: None,
            window_start: 0,
            oscillator_steps: 2000,
            burst_length: 2,
            threads: 1,
            max_elements: 1 << 26,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Parameter("repetitions must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Parameter("no sizes given".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Parameter("no methods given".into()));
        }
        if let Some(s) = self.sizes.iter().find(|s| !s.matches(self.scenario)) {
            return Err(Error::Parameter(format!("size {s} does not fit scenario {}", self.scenario)));
        }
        if self.scenario == Scenario::CsvEdmd && self.data.is_none() {
            return Err(Error::Parameter("csv_edmd needs an input file".into()));
        }
        if self.scenario == Scenario::OscillatorEdmd && (self.burst_length == 0 || self.oscillator_steps == 0) {
            return Err(Error::Parameter("oscillator steps and burst length must be positive".into()));
        }
        if !(self.rbf_sigma_scale > 0.0 && self.rbf_sigma_scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "RBF bandwidth scale must be > 0, got {}",
                self.rbf_sigma_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub scenario: Scenario,
    pub size: ProblemSize,
    pub method: FitMethod,
    pub median_seconds: f64,
    pub min_seconds: f64,
    pub max_seconds: f64,
    /// Fit residual for EDMD scenarios, `‖MPM − M‖/‖M‖` for `pinv_random`.
    pub residual_rel: f64,
    pub spectrum_gap_vs_svd: Option<f64>,
    pub threads: usize,
    pub check_passed: bool,
}

/// A (size, method) combination that produced no timing row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub size: ProblemSize,
    pub method: Option<FitMethod>,
    pub reason: String,
    /// True when the method itself failed rather than being refused up front.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<SkippedRow>,
    pub threads: usize,
}

impl BenchReport {
    pub fn all_checks_passed(&self) -> bool {
        self.rows.iter().all(|r| r.check_passed) && self.skipped.iter().all(|s| !s.failed)
    }

    pub fn row(&self, size: ProblemSize, method: FitMethod) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.size == size && r.method == method)
    }
}

/// A generated problem ready to be timed.
enum Problem {
    Pinv {
        m: DenseMatrix,
    },
    Edmd {
        yp: DenseMatrix,
        yf: DenseMatrix,
        truth: Option<DenseMatrix>,
    },
}

impl Problem {
    fn elements_needed(&self, method: FitMethod) -> usize {
        let (r, c) = match self {
            Problem::Pinv { m } => m.shape(),
            Problem::Edmd { yp, .. } => yp.shape(),
        };
        match method {
            FitMethod::Cholesky => r.min(c).pow(2).max(r * c),
            FitMethod::Svd | FitMethod::Qr => r * c + r.min(c).pow(2),
        }
    }
}

/// Result of one method on one problem, before timing statistics.
struct Outcome {
    output: DenseMatrix,
    residual: f64,
}

/// Runs every (size, method) combination sequentially.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let threads = cfg.threads.max(1);
    with_threads(threads, || run_sequential(cfg, threads))?
}

fn run_sequential(cfg: &BenchConfig, threads: usize) -> Result<BenchReport> {
    let table = match (&cfg.scenario, &cfg.data) {
        (Scenario::CsvEdmd, Some(path)) => Some(ingest::read_csv(path)?),
        _ => None,
    };
    let mut report = BenchReport {
        threads,
        ..Default::default()
    };
    for (index, &size) in cfg.sizes.iter().enumerate() {
        let problem = match generate(cfg, size, index as u64, table.as_ref()) {
            Ok(p) => p,
            Err(e) => {
                report.skipped.push(SkippedRow {
                    size,
                    method: None,
                    reason: e.to_string(),
                    failed: false,
                });
                continue;
            }
        };
        let first_row = report.rows.len();
        let mut spectra: Vec<(FitMethod, EigenSpectrum)> = Vec::new();
        for &method in &cfg.methods {
            let need = problem.elements_needed(method);
            if need > cfg.max_elements {
                report.skipped.push(SkippedRow {
                    size,
                    method: Some(method),
                    reason: format!("needs {need} matrix elements, cap is {}", cfg.max_elements),
                    failed: false,
                });
                continue;
            }
            let (times, outcome) = match time_method(cfg, &problem, method) {
                Ok(v) => v,
                Err(e) => {
                    report.skipped.push(SkippedRow {
                        size,
                        method: Some(method),
                        reason: e.to_string(),
                        failed: true,
                    });
                    continue;
                }
            };
            let check_passed = check(&problem, &outcome);
            if let Problem::Edmd { .. } = problem {
                if let Ok(s) = eigenvalues(&outcome.output) {
                    spectra.push((method, s));
                }
            }
            let (median, min, max) = summarize(times);
            report.rows.push(BenchRow {
                scenario: cfg.scenario,
                size,
                method,
                median_seconds: median,
                min_seconds: min,
                max_seconds: max,
                residual_rel: outcome.residual,
                spectrum_gap_vs_svd: None,
                threads,
                check_passed,
            });
        }

        let svd_spectrum = spectra.iter().find(|(m, _)| *m == FitMethod::Svd).map(|(_, s)| s.clone());
        for row in &mut report.rows[first_row..] {
            if let Some(svd) = &svd_spectrum {
                if let Some((_, s)) = spectra.iter().find(|(m, _)| *m == row.method) {
                    let top = SPECTRUM_TOP_N.min(s.len()).min(svd.len());
                    if top > 0 {
                        row.spectrum_gap_vs_svd = compare_spectra(s, svd, top).ok();
                    }
                }
            }
        }
    }
    Ok(report)
}

fn generate(cfg: &BenchConfig, size: ProblemSize, index: u64, table: Option<&ingest::TimeSeriesTable>) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    match size {
        ProblemSize::Matrix { rows, cols, rank } => Ok(Problem::Pinv {
            m: random_low_rank(rows, cols, rank, &mut rng)?,
        }),
        ProblemSize::Oscillators(n) => {
            let net = RingNetworkConfig::new(n);
            let runs = cfg.oscillator_steps.div_ceil(cfg.burst_length);
            let pair = ensemble_snapshots(&net, runs, cfg.burst_length, cfg.seed.wrapping_add(index))?;
            let keep = cfg.oscillator_steps;
            Ok(Problem::Edmd {
                yp: pair.past().columns(0, keep),
                yf: pair.future().columns(0, keep),
                truth: Some(one_step_map(&net)?),
            })
        }
        ProblemSize::Window(length) => {
            let table = table.ok_or_else(|| Error::Parameter("csv_edmd needs an input file".into()))?;
            let pair = table.to_snapshots(cfg.window_start, length)?;
            let dict = match cfg.rbf_count {
                None => DictionarySpec::identity(pair.state_dim()),
                Some(count) => scaled_rbf(pair.past(), count, cfg.seed, cfg.rbf_sigma_scale)?,
            };
            Ok(Problem::Edmd {
                yp: dict.lift(pair.past())?,
                yf: dict.lift(pair.future())?,
                truth: None,
            })
        }
    }
}

/// RBF dictionary with the median-distance bandwidth multiplied by `scale`.
pub fn scaled_rbf(x: &DenseMatrix, count: usize, seed: u64, scale: f64) -> Result<DictionarySpec> {
    let dict = build_rbf_centers(x, count, seed, BandwidthRule::MedianHeuristic)?;
    if scale == 1.0 {
        return Ok(dict);
    }
    match dict {
        DictionarySpec::GaussianRbf {
            centers,
            sigma,
            include_state,
            seed,
        } => {
            let spec = DictionarySpec::GaussianRbf {
                centers,
                sigma: sigma * scale,
                include_state,
                seed,
            };
            spec.validate()?;
            Ok(spec)
        }
        other => Ok(other),
    }
}

/// `rows x cols` product of Gaussian factors with inner dimension `rank`.
pub fn random_low_rank(rows: usize, cols: usize, rank: usize, rng: &mut ChaCha8Rng) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 || rank == 0 || rank > rows.min(cols) {
        return Err(Error::Parameter(format!(
            "cannot build a {rows}x{cols} matrix of rank {rank}"
        )));
    }
    let mut gauss = |r, c| DenseMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng));
    let a = gauss(rows, rank);
    let b = gauss(rank, cols);
    a.matmul(&b)
}

fn run_once(problem: &Problem, method: FitMethod) -> Result<DenseMatrix> {
    match problem {
        Problem::Pinv { m } => match method {
            FitMethod::Cholesky => pinv_cholesky(m),
            FitMethod::Svd => pinv_svd(m, Rcond::Auto),
            FitMethod::Qr => lstsq_qr(m, &DenseMatrix::identity(m.rows())),
        },
        Problem::Edmd { yp, yf, .. } => solve_operator(yp, yf, FitOptions::new(method)),
    }
}

fn time_method(cfg: &BenchConfig, problem: &Problem, method: FitMethod) -> Result<(Vec<f64>, Outcome)> {
    for _ in 0..cfg.warmup {
        run_once(problem, method)?;
    }
    let mut times = Vec::with_capacity(cfg.repetitions);
    let mut last = None;
    for _ in 0..cfg.repetitions {
        let start = Instant::now();
        let out = run_once(problem, method)?;
        times.push(start.elapsed().as_secs_f64().max(1e-9));
        last = Some(out);
    }
    let output = last.expect("at least one repetition");
    let residual = match problem {
        Problem::Pinv { m } => penrose_residual(m, &output)?,
        Problem::Edmd { yp, yf, .. } => relative_residual(&output, yp, yf)?,
    };
    Ok((times, Outcome { output, residual }))
}

/// `‖M P M − M‖_F / ‖M‖_F`.
pub fn penrose_residual(m: &DenseMatrix, p: &DenseMatrix) -> Result<f64> {
    let mpm = m.matmul(p)?.matmul(m)?;
    Ok(mpm.sub(m)?.frobenius_norm() / m.frobenius_norm().max(f64::MIN_POSITIVE))
}

fn check(problem: &Problem, outcome: &Outcome) -> bool {
    if !outcome.residual.is_finite() || !outcome.output.all_finite() {
        return false;
    }
    match problem {
        Problem::Pinv { .. } => outcome.residual <= PINV_CHECK_TOL,
        Problem::Edmd { truth: Some(a), .. } => {
            let err = outcome.output.sub(a).map(|d| d.frobenius_norm()).unwrap_or(f64::INFINITY);
            err <= RECOVERY_TOL * a.frobenius_norm() && outcome.residual <= OSCILLATOR_RESIDUAL_TOL
        }
        Problem::Edmd { truth: None, .. } => true,
    }
}

fn summarize(mut times: Vec<f64>) -> (f64, f64, f64) {
    times.sort_by(f64::total_cmp);
    let n = times.len();
    let median = if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    };
    (median, times[0], times[n - 1])
}

/// Writes one CSV line per report row under [`REPORT_COLUMNS`].
///
/// Scenario and method are stored as numeric codes and a missing spectrum
/// gap as `-1`, so the file reads back through [`ingest::read_csv`].
pub fn report_to_csv(report: &BenchReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(out, "{}", REPORT_COLUMNS.join(",")).map_err(io)?;
    for r in &report.rows {
        let (cols, rank) = match r.size {
            ProblemSize::Matrix { cols, rank, .. } => (cols, rank),
            _ => (0, 0),
        };
        let fields = [
            r.scenario.id().to_string(),
            r.size.primary().to_string(),
            method_id(r.method).to_string(),
            format_f64(r.median_seconds),
            format_f64(r.min_seconds),
            format_f64(r.max_seconds),
            format_f64(r.residual_rel),
            format_f64(r.spectrum_gap_vs_svd.unwrap_or(-1.0)),
            cols.to_string(),
            rank.to_string(),
            r.threads.to_string(),
            u8::from(r.check_passed).to_string(),
        ];
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads the rows of a report written by [`report_to_csv`].
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<BenchRow>> {
    let table = ingest::read_csv(path)?;
    if table.column_names != REPORT_COLUMNS {
        return Err(Error::Data(format!(
            "unexpected report columns {:?}",
            table.column_names
        )));
    }
    let bad = |what: &str, i: usize| Error::Data(format!("row {}: invalid {what}", i + 1));
    let code = |v: f64| (v >= 0.0 && v.fract() == 0.0 && v <= u8::MAX as f64).then_some(v as u8);
    let count = |v: f64| (v >= 0.0 && v.fract() == 0.0).then_some(v as usize);
    (0..table.n_rows())
        .map(|i| {
            let r = table.samples.row(i);
            let scenario = code(r[0]).and_then(Scenario::from_id).ok_or_else(|| bad("scenario", i))?;
            let primary = count(r[1]).ok_or_else(|| bad("size", i))?;
            let size = match scenario {
                Scenario::PinvRandom => ProblemSize::Matrix {
                    rows: primary,
                    cols: count(r[8]).ok_or_else(|| bad("size_cols", i))?,
                    rank: count(r[9]).ok_or_else(|| bad("size_rank", i))?,
                },
                Scenario::OscillatorEdmd => ProblemSize::Oscillators(primary),
                Scenario::CsvEdmd => ProblemSize::Window(primary),
            };
            Ok(BenchRow {
                scenario,
                size,
                method: code(r[2]).and_then(method_from_id).ok_or_else(|| bad("method", i))?,
                median_seconds: r[3],
                min_seconds: r[4],
                max_seconds: r[5],
                residual_rel: r[6],
                spectrum_gap_vs_svd: (r[7] >= 0.0).then_some(r[7]),
                threads: count(r[10]).ok_or_else(|| bad("threads", i))?,
                check_passed: r[11] != 0.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_parsing() {
        assert_eq!(
            ProblemSize::parse(Scenario::PinvRandom, "60x300x30").unwrap(),
            ProblemSize::Matrix { rows: 60, cols: 300, rank: 30 }
        );
        assert_eq!(
            ProblemSize::parse(Scenario::OscillatorEdmd, "50").unwrap(),
            ProblemSize::Oscillators(50)
        );
        assert!(ProblemSize::parse(Scenario::PinvRandom, "60x300").is_err());
        assert!(ProblemSize::parse(Scenario::CsvEdmd, "x").is_err());
    }

    #[test]
    fn scenario_codes() {
        for s in [Scenario::PinvRandom, Scenario::OscillatorEdmd, Scenario::CsvEdmd] {
            assert_eq!(Scenario::from_id(s.id()), Some(s));
            assert_eq!(s.as_str().parse::<Scenario>().unwrap(), s);
        }
        for m in FitMethod::ALL {
            assert_eq!(method_from_id(method_id(m)), Some(m));
        }
    }

    #[test]
    fn config_validation() {
        let ok = BenchConfig::new(Scenario::OscillatorEdmd, vec![ProblemSize::Oscillators(5)], vec![FitMethod::Svd]);
        assert!(ok.validate().is_ok());
        assert!(BenchConfig { repetitions: 0, ..ok.clone() }.validate().is_err());
        assert!(BenchConfig { sizes: vec![], ..ok.clone() }.validate().is_err());
        assert!(BenchConfig { methods: vec![], ..ok.clone() }.validate().is_err());
        assert!(BenchConfig { sizes: vec![ProblemSize::Window(3)], ..ok.clone() }.validate().is_err());
        let csv = BenchConfig::new(Scenario::CsvEdmd, vec![ProblemSize::Window(3)], vec![FitMethod::Svd]);
        assert!(csv.validate().is_err());
    }

    #[test]
    fn low_rank_generation_is_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(4);
        let mut b = ChaCha8Rng::seed_from_u64(4);
        let x = random_low_rank(6, 9, 2, &mut a).unwrap();
        assert_eq!(x, random_low_rank(6, 9, 2, &mut b).unwrap());
        assert!(random_low_rank(6, 9, 7, &mut a).is_err());
    }

    #[test]
    fn oversized_rows_are_skipped() {
        let cfg = BenchConfig {
            max_elements: 10,
            repetitions: 1,
            ..BenchConfig::new(
                Scenario::PinvRandom,
                vec![ProblemSize::Matrix { rows: 8, cols: 8, rank: 2 }],
                vec![FitMethod::Cholesky],
            )
        };
        let report = run_bench(&cfg).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.skipped.len(), 1);
        assert!(!report.skipped[0].failed);
        assert!(report.all_checks_passed());
    }

    #[test]
    fn summary_statistics() {
        assert_eq!(summarize(vec![3.0, 1.0, 2.0]), (2.0, 1.0, 3.0));
        assert_eq!(summarize(vec![4.0, 1.0, 2.0, 3.0]), (2.5, 1.0, 4.0));
    }
}
