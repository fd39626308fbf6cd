use std::path::{Path, PathBuf};

use rvvprobe_core::{calibrate_suite, CalibrationParams, EventKind, Verdict};
use rvvprobe_harness::replay::{load_replay, ReplayError, ReplayFixture};
use rvvprobe_harness::report::{render, OutputFormat, ReportKind, ReportRequest};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures").join(name)
}

fn counter_fixture() -> ReplayFixture {
    ReplayFixture::load(&fixture("x60_counters.json")).unwrap()
}

#[test]
fn flw_row_and_run_count() {
    let f = counter_fixture();
    let samples = f.samples();
    assert_eq!(samples.len(), 50);
    let flw: Vec<_> = samples.iter().filter(|s| s.kernel_name == "flw").collect();
    assert_eq!(flw.len(), 5);
    let c = flw[0].counts;
    assert_eq!(c.retired, Some(13_100_000_000));
    assert_eq!(c.fp_ld, Some(12_800_000_000));
    assert_eq!(c.fp, Some(12_800_000_000));
    assert_eq!(c.vec_ld, Some(16));
    assert_eq!(load_replay(&fixture("x60_counters.json")).unwrap(), samples);
}

#[test]
fn references_match_reported_instruction_budget() {
    for r in counter_fixture().references().unwrap() {
        assert_eq!(r.counts.retired, 12_800_000_000, "{}", r.kernel);
    }
}

#[test]
fn usable_set_and_retired_errors() {
    let f = counter_fixture();
    let report = calibrate_suite(&f.samples(), &f.references().unwrap(), &CalibrationParams::default());
    use EventKind::*;
    assert_eq!(report.usable, vec![Retired, VecLd, VecSt, FpLd, FpSt]);
    assert_eq!(report.excluded, vec![Vec, Fp]);
    let retired = report.verdict(Retired).unwrap();
    for check in &retired.per_kernel {
        let err = check.relative_error.unwrap();
        assert!((0.015..=0.032).contains(&err), "{}: {err}", check.kernel);
    }
}

#[test]
fn six_percent_error_on_fp_loads_marks_only_that_event() {
    let mut f = counter_fixture();
    let k = f.kernels.iter_mut().find(|k| k.name == "flw").unwrap();
    for run in &mut k.runs {
        run.counts.fp_ld = Some((12_800_000_000f64 * 1.06) as u64);
    }
    let report = calibrate_suite(&f.samples(), &f.references().unwrap(), &CalibrationParams::default());
    assert_eq!(report.verdict(EventKind::FpLd).unwrap().verdict, Verdict::Unreliable);
    use EventKind::*;
    assert_eq!(report.usable, vec![Retired, VecLd, VecSt, FpSt]);
}

#[test]
fn negative_count_is_a_schema_error_with_path() {
    let text = std::fs::read_to_string(fixture("x60_counters.json")).unwrap();
    let bad = text.replacen("\"retired\": 13100000000", "\"retired\": -5", 1);
    match ReplayFixture::parse(&bad, Path::new("bad.json")) {
        Err(ReplayError::Schema { field, .. }) => assert_eq!(field, "kernels[0].runs[0].counts.retired"),
        other => panic!("expected schema error, got {other:?}"),
    }
}

#[test]
fn calibration_table_layout() {
    let req = ReportRequest::new(ReportKind::CalibrationTable, vec![fixture("x60_counters.json")]);
    let doc = render(&req).unwrap();
    assert_eq!(doc.rows.len(), 10);
    assert_eq!(doc.columns.len(), 9);
    let flw = &doc.rows[0];
    assert_eq!(flw[0], "flw");
    assert_eq!(flw[1], "1.28e10");
    assert_eq!(flw[2], "1.31e10*");
    assert_eq!(flw[7], "696");
    let vfadd = doc.rows.iter().find(|r| r[0] == "vfadd.vv").unwrap();
    assert_eq!(vfadd[8], "2.56e10!");
    assert!(doc.notes.iter().any(|n| n == "usable: retired-ins, vec-ld-ins, vec-st-ins, fp-ld-ins, fp-st-ins"));
    let text = doc.format(OutputFormat::Table);
    assert!(text.contains("vmacc.vv"));
}

#[test]
fn reports_are_deterministic_and_tidy() {
    for kind in [ReportKind::CalibrationTable, ReportKind::ThroughputTable, ReportKind::StrideCompare, ReportKind::TailOverheadCurve] {
        let input = if kind == ReportKind::CalibrationTable { "x60_counters.json" } else { "jupiter_kernels.json" };
        let mut req = ReportRequest::new(kind, vec![fixture(input)]);
        req.format = OutputFormat::Csv;
        let a = rvvprobe_harness::report::render_to_string(&req).unwrap();
        let b = rvvprobe_harness::report::render_to_string(&req).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("record_id,subject,variant,metric,value\n"), "{kind:?}");
        assert!(a.lines().count() > 1, "{kind:?}");
    }
}

#[test]
fn kernel_fixture_throughputs() {
    let req = ReportRequest::new(ReportKind::ThroughputTable, vec![fixture("jupiter_kernels.json")]);
    let doc = render(&req).unwrap();
    let g = |name: &str| doc.value(name, "gops_per_sec").unwrap();
    assert!((g("unit-load_vle8.v_e8_m1") - 28.4).abs() < 0.01);
    assert!((g("unit-load_vle64.v_e64_m1") - 3.55).abs() < 0.01);

    let stride = render(&ReportRequest::new(ReportKind::StrideCompare, vec![fixture("jupiter_kernels.json")])).unwrap();
    assert_eq!(stride.rows.len(), 4);
    assert_eq!(stride.rows[0][3], "1.78");
    assert_eq!(stride.rows[0][4], "9.20");
    assert_eq!(stride.rows[0][5], "1.78");

    let tail = render(&ReportRequest::new(ReportKind::TailOverheadCurve, vec![fixture("jupiter_kernels.json")])).unwrap();
    assert_eq!(tail.rows.len(), 32);
    for row in &tail.rows {
        assert_eq!(row[5], "34.9%", "{row:?}");
    }
    let last = tail.rows.last().unwrap();
    assert_eq!((last[3].as_str(), last[4].as_str()), ("28.40", "18.50"));
}

#[test]
fn mixed_vlen_inputs_are_refused() {
    let mut f = counter_fixture();
    f.platform.vlen = 512;
    let dir = tempfile::tempdir().unwrap();
    let other = dir.path().join("other.json");
    std::fs::write(&other, f.to_json()).unwrap();
    let mut req = ReportRequest::new(ReportKind::CalibrationTable, vec![fixture("x60_counters.json"), other]);
    assert!(render(&req).is_err());
    req.allow_mixed_platforms = true;
    assert!(render(&req).is_ok());
}
