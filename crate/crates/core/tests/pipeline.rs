use proptest::prelude::*;
use riszf_core::harness::report::{report_from_json, CSV_HEADER};
use riszf_core::harness::{
    emit_report, resolve_config, run_experiment, ConfigOverrides, ExperimentSpec, Format, OutputKind,
    RowKind, Sweep, SweepParam,
};
use riszf_core::{CsiMode, PhaseMode, SystemConfig};

fn small_spec() -> ExperimentSpec {
    let text = r#"
name = "small"
phase_mode = "algorithm1"
csi_mode = "imperfect"
outputs = ["analytic_cdf", "empirical_cdf", "avg_se"]
trials = 300
grid = [0.5, 1.0, 2.0]

[sweep]
param = "p_dB"
values = [0, 10]

[base]
M = 2
N = 4
L = 16
"#;
    ExperimentSpec::from_toml_str(text).unwrap()
}

#[test]
fn experiment_file_runs_end_to_end() {
    let spec = small_spec();
    assert_eq!(spec.phase_mode, PhaseMode::Algorithm1);
    assert_eq!(spec.csi_mode, CsiMode::Imperfect);
    let report = run_experiment(&spec, 2).unwrap();
    assert_eq!(report.records.len(), 2);
    for rec in &report.records {
        // 3 analytic CDF points, 3 empirical, analytic and Monte Carlo SE
        assert_eq!(rec.rows.len(), 8);
        let mc = rec.rows.iter().find(|r| r.kind == RowKind::AvgSeMc).unwrap();
        assert_eq!(mc.trials, 300);
        assert_eq!(mc.seed, spec.seed());
    }
    assert_eq!(report.spec_hash, spec.hash());
}

#[test]
fn reports_written_to_disk_round_trip() {
    let report = run_experiment(&small_spec(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv_path = dir.path().join("r.csv");
    emit_report(&report, Format::Json, Some(&json)).unwrap();
    emit_report(&report, Format::Csv, Some(&csv_path)).unwrap();
    let back = report_from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(back, report);
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 16);
}

#[test]
fn unwritable_path_surfaces_io_error() {
    let report = run_experiment(&ExperimentSpec::builtin("fig3").unwrap(), 1).unwrap();
    let err = emit_report(&report, Format::Csv, Some(std::path::Path::new("/nonexistent/dir/out.csv"))).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/out.csv"), "{err}");
}

#[test]
fn empirical_rows_are_identical_across_worker_counts() {
    let spec = small_spec();
    let a = run_experiment(&spec, 1).unwrap();
    let b = run_experiment(&spec, 3).unwrap();
    let rows = |r: &riszf_core::harness::ExperimentReport| {
        r.records.iter().map(|p| p.rows.clone()).collect::<Vec<_>>()
    };
    assert_eq!(rows(&a), rows(&b));
}

#[test]
fn sweep_over_rician_factor_lowers_se() {
    let cfg = SystemConfig { p: 10.0, ..Default::default() };
    let mut spec = ExperimentSpec::single("kappa", &cfg, vec![OutputKind::AvgSe]);
    spec.sweep = Sweep { param: SweepParam::KappaDb, values: vec![-20.0, 0.0, 10.0] };
    let report = run_experiment(&spec, 1).unwrap();
    let se: Vec<f64> = report.records.iter().map(|r| r.rows[0].value).collect();
    assert!(se[0] > se[2], "{se:?}");
}

proptest! {
    #[test]
    fn flag_values_always_win(file_p in -20.0f64..40.0, flag_p in -20.0f64..40.0, seed in 0u64..1000) {
        let file = ConfigOverrides { p_db: Some(file_p), seed: Some(seed), ..Default::default() };
        let flags = ConfigOverrides { p_db: Some(flag_p), ..Default::default() };
        let cfg = resolve_config(Some(&file), &flags).unwrap();
        prop_assert!((cfg.p_db() - flag_p).abs() < 1e-9);
        prop_assert_eq!(cfg.seed, seed);
    }

    #[test]
    fn sweep_values_land_in_the_config(l in 1usize..2000, q in 1u32..9, ct in 1u64..100_000) {
        let spec = ExperimentSpec::builtin("fig4").unwrap();
        let mut c = spec.point_config(0.0);
        SweepParam::L.apply(&mut c, l as f64);
        SweepParam::Q.apply(&mut c, q as f64);
        SweepParam::Ct.apply(&mut c, ct as f64);
        prop_assert_eq!((c.l, c.q, c.coherence_time), (l, q, ct));
        prop_assert_eq!(c.upa_lris.count(), l);
    }
}
