use std::fs;

use koopman_core::bench::{
    read_report_csv, report_to_csv, run_bench, BenchConfig, BenchReport, BenchRow, ProblemSize, Scenario,
};
use koopman_core::ingest::{read_csv, write_table};
use koopman_core::koopman::FitMethod;
use koopman_core::oscillator::{simulate, RingNetworkConfig};

fn quick(scenario: Scenario, sizes: Vec<ProblemSize>, methods: Vec<FitMethod>) -> BenchConfig {
    BenchConfig {
        repetitions: 2,
        warmup: 0,
        ..BenchConfig::new(scenario, sizes, methods)
    }
}

#[test]
fn pinv_random_passes_penrose_checks() {
    let cfg = quick(
        Scenario::PinvRandom,
        vec![ProblemSize::Matrix { rows: 60, cols: 300, rank: 30 }],
        FitMethod::ALL.to_vec(),
    );
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.rows.len(), 3);
    for r in &report.rows {
        assert!(r.check_passed, "{}: residual {}", r.method, r.residual_rel);
        assert!(r.residual_rel <= 1e-8);
        assert!(r.min_seconds > 0.0 && r.min_seconds <= r.median_seconds && r.median_seconds <= r.max_seconds);
        assert_eq!(r.threads, 1);
    }
}

#[test]
fn oscillator_smoke_run() {
    let cfg = quick(
        Scenario::OscillatorEdmd,
        vec![ProblemSize::Oscillators(50)],
        vec![FitMethod::Cholesky],
    );
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert!(report.rows[0].median_seconds > 0.0);
    assert!(report.rows[0].check_passed);
    assert_eq!(report.rows[0].spectrum_gap_vs_svd, None);
}

#[test]
fn spectrum_gap_is_reported_against_svd() {
    let cfg = quick(
        Scenario::OscillatorEdmd,
        vec![ProblemSize::Oscillators(10)],
        vec![FitMethod::Cholesky, FitMethod::Svd, FitMethod::Qr],
    );
    let report = run_bench(&cfg).unwrap();
    assert!(report.all_checks_passed());
    for r in &report.rows {
        let gap = r.spectrum_gap_vs_svd.unwrap();
        assert!(gap <= 1e-6, "{}: {gap}", r.method);
    }
    assert_eq!(report.row(ProblemSize::Oscillators(10), FitMethod::Svd).unwrap().spectrum_gap_vs_svd, Some(0.0));
}

#[test]
fn csv_scenario_uses_windows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let traj = simulate(&RingNetworkConfig::new(5), None, 400, Some(2)).unwrap();
    write_table(&path, &traj.to_table().unwrap()).unwrap();
    let cfg = BenchConfig {
        data: Some(path),
        rbf_count: Some(12),
        ..quick(
            Scenario::CsvEdmd,
            vec![ProblemSize::Window(100), ProblemSize::Window(300), ProblemSize::Window(1000)],
            vec![FitMethod::Cholesky, FitMethod::Svd],
        )
    };
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!(report.skipped.len(), 1);
    assert_eq!(report.skipped[0].size, ProblemSize::Window(1000));
    assert!(report.all_checks_passed());
    for r in &report.rows {
        assert!(r.residual_rel.is_finite() && r.residual_rel < 1.0);
        assert!(r.spectrum_gap_vs_svd.is_some());
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = quick(
        Scenario::PinvRandom,
        vec![ProblemSize::Matrix { rows: 20, cols: 30, rank: 5 }],
        vec![FitMethod::Svd],
    );
    let a = run_bench(&cfg).unwrap();
    let b = run_bench(&cfg).unwrap();
    assert_eq!(a.rows[0].residual_rel, b.rows[0].residual_rel);
}

fn row(size: ProblemSize, method: FitMethod, gap: Option<f64>) -> BenchRow {
    BenchRow {
        scenario: match size {
            ProblemSize::Matrix { .. } => Scenario::PinvRandom,
            ProblemSize::Oscillators(_) => Scenario::OscillatorEdmd,
            ProblemSize::Window(_) => Scenario::CsvEdmd,
        },
        size,
        method,
        median_seconds: 0.125,
        min_seconds: 0.1 / 3.0,
        max_seconds: 1.5,
        residual_rel: 2.5e-13,
        spectrum_gap_vs_svd: gap,
        threads: 2,
        check_passed: true,
    }
}

#[test]
fn empty_report_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    report_to_csv(&BenchReport::default(), &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 1);
    assert!(read_report_csv(&path).unwrap().is_empty());
}

#[test]
fn report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let report = BenchReport {
        rows: vec![
            row(ProblemSize::Matrix { rows: 60, cols: 300, rank: 30 }, FitMethod::Qr, None),
            row(ProblemSize::Oscillators(400), FitMethod::Cholesky, Some(3.25e-12)),
            row(ProblemSize::Window(3000), FitMethod::Svd, Some(0.0)),
        ],
        skipped: vec![],
        threads: 2,
    };
    report_to_csv(&report, &path).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 4);
    assert_eq!(read_csv(&path).unwrap().samples.shape(), (3, 12));
    assert_eq!(read_report_csv(&path).unwrap(), report.rows);
}
