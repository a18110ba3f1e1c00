//! `koopman`: simulate ring networks, fit Koopman operators, inspect spectra,
//! predict, and benchmark the solvers.
//!
//! Exit codes: 0 on success, 1 on data or numeric errors (including failed
//! benchmark checks), 2 on usage or parameter errors. The linear-algebra
//! thread count is read from `KOOP_THREADS` (default 1).

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use koopman_core::bench::{self, BenchConfig, ProblemSize, Scenario};
use koopman_core::dictionary::{build_rbf_centers, BandwidthRule, DictionarySpec};
use koopman_core::ingest::{self, format_f64};
use koopman_core::koopman::{compare_spectra, edmd_fit, FitMethod, KoopmanModel, SnapshotPair};
use koopman_core::linalg::DenseMatrix;
use koopman_core::oscillator::{simulate, RingNetworkConfig};
use koopman_core::{with_threads, Error};
use serde::Serialize;

use crate::manifest::{manifest_path, write_atomic, RunManifest};

const THREADS_ENV: &str = "KOOP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "koopman", version, about = "Koopman operator learning from snapshot data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the damped oscillator ring and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Fit a Koopman operator to CSV time series and save the model.
    Fit(FitArgs),
    /// Write the eigenvalues of a fitted operator.
    Eig(EigArgs),
    /// Iterate a fitted operator from an initial state.
    Predict(PredictArgs),
    /// Time the solvers and check their results.
    Bench(BenchArgs),
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    oscillators: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 0.4)]
    damping: f64,
    #[arg(long, default_value_t = 1.0)]
    edge_weight: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DictKind {
    Identity,
    Rbf,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// Input CSV; repeat to pool snapshot pairs from several files.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = DictKind::Identity)]
    dict: DictKind,
    #[arg(long, default_value_t = 100)]
    rbf_count: usize,
    /// Explicit RBF bandwidth; the median pairwise distance is used otherwise.
    #[arg(long)]
    rbf_sigma: Option<f64>,
    /// Multiplier on the median-distance bandwidth.
    #[arg(long, default_value_t = 1.0)]
    rbf_sigma_scale: f64,
    /// Append the raw state to the RBF features.
    #[arg(long)]
    include_state: bool,
    #[arg(long, default_value = "cholesky")]
    method: FitMethod,
    /// Rows `START:LENGTH` of every input file.
    #[arg(long)]
    window: Option<Window>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
struct Window {
    start: usize,
    length: usize,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("window {s:?} is not START:LENGTH"))?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("window {s:?} is not START:LENGTH"));
        Ok(Window {
            start: num(a)?,
            length: num(b)?,
        })
    }
}

#[derive(Debug, Args, Serialize)]
struct EigArgs {
    #[arg(long)]
    model: PathBuf,
    /// Number of leading eigenvalues to write (all by default).
    #[arg(long)]
    top: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Second model whose spectrum is compared against this one.
    #[arg(long)]
    compare: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Initial state: comma-separated values, or a CSV file whose first row is used.
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    #[arg(long)]
    scenario: Scenario,
    /// Comma-separated sizes: `ROWSxCOLSxRANK` for pinv_random, counts otherwise.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "cholesky,svd,qr")]
    methods: Vec<FitMethod>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Input CSV for csv_edmd.
    #[arg(long)]
    data: Option<PathBuf>,
    /// RBF dictionary size for csv_edmd (identity dictionary when absent).
    #[arg(long)]
    rbf_count: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    rbf_sigma_scale: f64,
    #[arg(long, default_value_t = 0)]
    window_start: usize,
    /// Snapshot pairs per oscillator_edmd problem.
    #[arg(long, default_value_t = 2000)]
    steps: usize,
    /// Steps per trajectory in the oscillator_edmd ensemble.
    #[arg(long, default_value_t = 2)]
    burst: usize,
    /// Largest matrix, in elements, a method may need before its row is skipped.
    #[arg(long, default_value_t = 1 << 26)]
    max_elements: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Failure of a command, with the process exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parameter(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match thread_count() {
        Ok(t) => t,
        Err(f) => return report(f),
    };
    let outcome = with_threads(threads, || run(cli.command, threads)).map_err(Failure::from);
    match outcome.and_then(|r| r) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    eprintln!("error: {}", f.message);
    ExitCode::from(f.code)
}

fn thread_count() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

fn run(command: Command, threads: usize) -> Result<(), Failure> {
    let start = Instant::now();
    match command {
        Command::Simulate(args) => cmd_simulate(args, threads, start),
        Command::Fit(args) => cmd_fit(args, threads, start),
        Command::Eig(args) => cmd_eig(args, threads, start),
        Command::Predict(args) => cmd_predict(args, threads, start),
        Command::Bench(args) => cmd_bench(args, threads, start),
    }
}

struct Finished<'a, P: Serialize> {
    command: &'static str,
    parameters: &'a P,
    seed: Option<u64>,
    threads: usize,
    outputs: Vec<PathBuf>,
    results: serde_json::Map<String, serde_json::Value>,
}

fn write_manifest<P: Serialize>(done: Finished<'_, P>, at: &Path, is_dir: bool, start: Instant) -> Result<(), Failure> {
    let path = manifest_path(at, is_dir);
    let manifest = RunManifest {
        command: done.command,
        parameters: done.parameters,
        seed: done.seed,
        version: env!("CARGO_PKG_VERSION"),
        threads: done.threads,
        outputs: done.outputs,
        wall_seconds: start.elapsed().as_secs_f64(),
        results: done.results,
    };
    write_atomic(&path, &manifest).map_err(|e| Failure {
        code: 1,
        message: format!("cannot write manifest {}: {e}", path.display()),
    })
}

fn cmd_simulate(args: SimulateArgs, threads: usize, start: Instant) -> Result<(), Failure> {
    let cfg = RingNetworkConfig {
        oscillators: args.oscillators,
        damping: args.damping,
        edge_weight: args.edge_weight,
        dt: args.dt,
    };
    let traj = simulate(&cfg, None, args.steps, Some(args.seed))?;
    ingest::write_table(&args.out, &traj.to_table()?)?;
    println!(
        "wrote {} samples of {} states to {}",
        traj.len(),
        cfg.state_dim(),
        args.out.display()
    );
    let done = Finished {
        command: "simulate",
        parameters: &args,
        seed: Some(args.seed),
        threads,
        outputs: vec![args.out.clone()],
        results: Default::default(),
    };
    write_manifest(done, &args.out, false, start)
}

fn load_pairs(args: &FitArgs) -> Result<SnapshotPair, Failure> {
    let mut pairs = Vec::with_capacity(args.data.len());
    let mut width = None;
    for path in &args.data {
        let table = ingest::read_csv(path)?;
        if *width.get_or_insert(table.n_vars()) != table.n_vars() {
            return Err(Failure::from(Error::Data(format!(
                "{} has {} variables, earlier inputs have {}",
                path.display(),
                table.n_vars(),
                width.unwrap_or(0)
            ))));
        }
        let (start, length) = match args.window {
            Some(w) => (w.start, w.length),
            None => (0, table.n_rows()),
        };
        if args.window.is_none() && length < 2 {
            return Err(Failure::from(Error::Data(format!(
                "{} has {length} rows; at least 2 are needed",
                path.display()
            ))));
        }
        pairs.push(table.to_snapshots(start, length)?);
    }
    Ok(SnapshotPair::concat(&pairs)?)
}

fn fit_dictionary(args: &FitArgs, pair: &SnapshotPair) -> Result<DictionarySpec, Failure> {
    let dict = match args.dict {
        DictKind::Identity => DictionarySpec::identity(pair.state_dim()),
        DictKind::Rbf => match args.rbf_sigma {
            Some(sigma) => build_rbf_centers(pair.past(), args.rbf_count, args.seed, BandwidthRule::Explicit(sigma))?,
            None => bench::scaled_rbf(pair.past(), args.rbf_count, args.seed, args.rbf_sigma_scale)?,
        },
    };
    Ok(match dict {
        DictionarySpec::GaussianRbf {
            centers,
            sigma,
            seed,
            ..
        } if args.include_state => {
            let spec = DictionarySpec::GaussianRbf {
                centers,
                sigma,
                include_state: true,
                seed,
            };
            spec.validate()?;
            spec
        }
        other => other,
    })
}

fn cmd_fit(args: FitArgs, threads: usize, start: Instant) -> Result<(), Failure> {
    if !(args.rbf_sigma_scale > 0.0 && args.rbf_sigma_scale.is_finite()) {
        return Err(usage("--rbf-sigma-scale must be positive"));
    }
    let pair = load_pairs(&args)?;
    let dict = fit_dictionary(&args, &pair)?;
    let model = edmd_fit(&pair, &dict, args.method)?;
    model.save(&args.out)?;
    println!("residual_rel {}", format_f64(model.residual_rel()));
    println!("fit_seconds {}", format_f64(model.fit_seconds()));
    println!(
        "operator {}x{} ({} method, {} snapshot pairs)",
        model.operator().rows(),
        model.operator().cols(),
        model.method(),
        pair.len()
    );
    let mut results = serde_json::Map::new();
    results.insert("residual_rel".into(), model.residual_rel().into());
    results.insert("fit_seconds".into(), model.fit_seconds().into());
    results.insert("snapshot_pairs".into(), pair.len().into());
    let out = &args.out;
    let done = Finished {
        command: "fit",
        parameters: &args,
        seed: Some(args.seed),
        threads,
        outputs: [
            koopman_core::koopman::OPERATOR_FILE,
            koopman_core::koopman::DICTIONARY_FILE,
            koopman_core::koopman::METADATA_FILE,
        ]
        .iter()
        .map(|f| out.join(f))
        .collect(),
        results,
    };
    write_manifest(done, out, true, start)
}

fn cmd_eig(args: EigArgs, threads: usize, start: Instant) -> Result<(), Failure> {
    let model = KoopmanModel::load(&args.model)?;
    let spectrum = model.spectrum()?;
    let top = match args.top {
        Some(0) => return Err(usage("--top must be at least 1")),
        Some(n) => n.min(spectrum.len()),
        None => spectrum.len(),
    };
    let values = &spectrum.values()[..top];
    let table = DenseMatrix::from_fn(top, 3, |i, j| match j {
        0 => values[i].re,
        1 => values[i].im,
        _ => values[i].norm(),
    });
    ingest::write_csv(&args.out, &["re", "im", "magnitude"], &table)?;
    println!("wrote {top} eigenvalues to {}", args.out.display());

    let mut results = serde_json::Map::new();
    results.insert("spectral_radius".into(), spectrum.spectral_radius().into());
    if let Some(other) = &args.compare {
        let other = KoopmanModel::load(other)?;
        let other_spectrum = other.spectrum()?;
        let n = top.min(other_spectrum.len());
        let gap = compare_spectra(spectrum, other_spectrum, n)?;
        println!("spectrum_gap {}", format_f64(gap));
        results.insert("spectrum_gap".into(), gap.into());
        results.insert("compared_eigenvalues".into(), n.into());
    }
    let done = Finished {
        command: "eig",
        parameters: &args,
        seed: None,
        threads,
        outputs: vec![args.out.clone()],
        results,
    };
    write_manifest(done, &args.out, false, start)
}

/// Inline `a,b,c` values, or the first data row of a CSV file.
fn parse_x0(text: &str) -> Result<Vec<f64>, Failure> {
    let inline: Result<Vec<f64>, _> = text.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match inline {
        Ok(v) if v.iter().all(|x| x.is_finite()) => Ok(v),
        Ok(_) => Err(usage("--x0 contains non-finite values")),
        Err(_) => {
            let path = Path::new(text);
            if !path.exists() {
                return Err(usage(format!("--x0 {text:?} is neither a list of numbers nor a file")));
            }
            let table = ingest::read_csv(path)?;
            if table.n_rows() == 0 {
                return Err(Failure::from(Error::Data(format!("{text} has no data rows"))));
            }
            Ok(table.samples.row(0).to_vec())
        }
    }
}

fn cmd_predict(args: PredictArgs, threads: usize, start: Instant) -> Result<(), Failure> {
    let model = KoopmanModel::load(&args.model)?;
    let x0 = parse_x0(&args.x0)?;
    if x0.len() != model.dictionary().state_dim() {
        return Err(Failure::from(Error::Data(format!(
            "initial state has {} entries, the model expects {}",
            x0.len(),
            model.dictionary().state_dim()
        ))));
    }
    let z = model.predict(&x0, args.steps)?;
    let names: Vec<String> = (0..z.rows()).map(|k| format!("psi_{k}")).collect();
    ingest::write_csv(&args.out, &names, &z.transpose())?;
    println!("wrote {} steps of {} features to {}", args.steps, z.rows(), args.out.display());
    let done = Finished {
        command: "predict",
        parameters: &args,
        seed: None,
        threads,
        outputs: vec![args.out.clone()],
        results: Default::default(),
    };
    write_manifest(done, &args.out, false, start)
}

fn cmd_bench(args: BenchArgs, threads: usize, start: Instant) -> Result<(), Failure> {
    let sizes = args
        .sizes
        .iter()
        .map(|s| ProblemSize::parse(args.scenario, s))
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = BenchConfig {
        repetitions: args.reps,
        warmup: args.warmup,
        seed: args.seed,
        rbf_count: args.rbf_count,
        rbf_sigma_scale: args.rbf_sigma_scale,
        data: args.data.clone(),
        window_start: args.window_start,
        oscillator_steps: args.steps,
        burst_length: args.burst,
        threads,
        max_elements: args.max_elements,
        ..BenchConfig::new(args.scenario, sizes, args.methods.clone())
    };
    let report = bench::run_bench(&cfg)?;
    bench::report_to_csv(&report, &args.out)?;
    for r in &report.rows {
        println!(
            "{} size {} {}: median {:.6} s (min {:.6}, max {:.6}), residual {:.3e}{}{}",
            r.scenario,
            r.size,
            r.method,
            r.median_seconds,
            r.min_seconds,
            r.max_seconds,
            r.residual_rel,
            r.spectrum_gap_vs_svd.map(|g| format!(", gap vs svd {g:.3e}")).unwrap_or_default(),
            if r.check_passed { "" } else { "  CHECK FAILED" }
        );
    }
    for s in &report.skipped {
        let method = s.method.map(|m| m.to_string()).unwrap_or_else(|| "all methods".into());
        let what = if s.failed { "failed" } else { "skipped" };
        println!("size {} {method} {what}: {}", s.size, s.reason);
    }
    let passed = report.all_checks_passed();
    let mut results = serde_json::Map::new();
    results.insert("all_checks_passed".into(), passed.into());
    results.insert(
        "skipped".into(),
        serde_json::to_value(&report.skipped).map_err(|e| usage(e.to_string()))?,
    );
    let done = Finished {
        command: "bench",
        parameters: &args,
        seed: Some(args.seed),
        threads,
        outputs: vec![args.out.clone()],
        results,
    };
    write_manifest(done, &args.out, false, start)?;
    if passed {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: "one or more correctness checks failed".into(),
        })
    }
}
