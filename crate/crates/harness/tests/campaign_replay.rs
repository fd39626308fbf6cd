use std::path::{Path, PathBuf};

use rvvprobe_core::calibrate_suite;
use rvvprobe_core::CalibrationParams;
use rvvprobe_harness::campaign::{
    expand_matrix, run_campaign, CampaignContext, CampaignReplay, CompilerFile, ManifestFile, Mode, ReplayAppRunner,
    LMUL_LEVELS,
};
use rvvprobe_harness::replay::ReplayFixture;
use rvvprobe_harness::report::{render, ReportKind, ReportRequest};
use rvvprobe_harness::store::{CampaignRecord, ResultsStore};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn calibration() -> rvvprobe_core::CalibrationReport {
    let f = ReplayFixture::load(&data("fixtures/x60_counters.json")).unwrap();
    calibrate_suite(&f.samples(), &f.references().unwrap(), &CalibrationParams::default())
}

fn run_full(store_dir: &Path, work: &Path) -> Vec<CampaignRecord> {
    let apps = ManifestFile::load(&data("campaign/apps.toml")).unwrap().apps;
    let compilers = CompilerFile::load(&data("campaign/compilers_fake.toml")).unwrap().compilers;
    let jobs = expand_matrix(&apps, &compilers, &LMUL_LEVELS).unwrap();
    assert_eq!(jobs.len(), 86);
    let cal = calibration();
    let ctx = CampaignContext {
        apps: &apps,
        compilers: &compilers,
        calibration: &cal,
        baseline: "gcc:nonvec".parse().unwrap(),
        runs: 5,
        work_dir: work,
    };
    let mut runner = ReplayAppRunner::new(CampaignReplay::load(&data("fixtures/campaign_jupiter.json")).unwrap());
    run_campaign(&jobs, &ctx, &mut runner, &ResultsStore::new(store_dir)).unwrap()
}

fn nearly(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn full_matrix_replay_reproduces_fixture_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("results");
    let records = run_full(&store, &dir.path().join("work"));
    assert!(records.iter().all(|r| r.valid), "{:?}", records.iter().find(|r| !r.valid));
    // Uncalibrated events never reach the store.
    assert!(records.iter().all(|r| r.counts.vec.is_none() && r.counts.fp.is_none()));

    let rec = |id: &str| records.iter().find(|r| r.id == id).unwrap();
    assert_eq!(rec("sgemm/gcc/nonvec").speedup, Some(1.0));
    assert!(nearly(rec("sgemm/clang/autovec").speedup.unwrap(), 2.4, 0.005));
    assert!(nearly(rec("sgemm/gcc/autovec").speedup.unwrap(), 1.85, 0.005));
    assert!(nearly(rec("sgemm/clang/autovec").reduction.unwrap(), 4.7, 0.005));
    assert!(nearly(rec("yolov3/gcc/autovec/lmul8").reduction.unwrap(), 13.1, 0.005));
    assert!(nearly(rec("yolov3/gcc/autovec/lmul8").speedup.unwrap(), 1.2, 0.005));
    assert_eq!(rec("qsim/clang/intrinsics").baseline, "qsim/gcc/nonvec");

    let speed = render(&ReportRequest::new(ReportKind::SpeedupBars, vec![store.clone()])).unwrap();
    assert_eq!(speed.rows.len(), 7);
    assert!(nearly(speed.value("sgemm/clang/autovec", "speedup").unwrap(), 2.4, 0.005));

    let mut rel = ReportRequest::new(ReportKind::SpeedupBars, vec![store.clone()]);
    rel.relative_to = Some("clang:nonvec".into());
    let own = render(&rel).unwrap();
    assert!(nearly(own.value("qsim/clang/intrinsics", "speedup").unwrap(), 1.6, 0.005));

    let sweep = render(&ReportRequest::new(ReportKind::LmulSweep, vec![store.clone()])).unwrap();
    assert!(nearly(sweep.value("sgemm/clang/autovec/lmul2", "speedup").unwrap(), 2.35, 0.005));
    assert!(nearly(sweep.value("sgemm/clang/autovec/lmul8", "speedup").unwrap(), 0.85, 0.005));
    assert_eq!(sweep.value("sgemm/clang/autovec/lmul2", "best_lmul"), Some(2.0));
    assert_eq!(sweep.value("sgemm/gcc/autovec/lmul4", "best_lmul"), Some(4.0));
    for app in ["stream", "spmv"] {
        for cc in ["gcc", "clang"] {
            for l in LMUL_LEVELS {
                let v = sweep.value(&format!("{app}/{cc}/autovec/lmul{l}"), "speedup").unwrap();
                assert!(v <= 1.0, "{app}/{cc}/lmul{l}: {v}");
            }
        }
    }

    let mix = render(&ReportRequest::new(ReportKind::MixStacks, vec![store.clone()])).unwrap();
    assert_eq!(mix.rows.len(), 86);
    let red = render(&ReportRequest::new(ReportKind::ReductionBars, vec![store])).unwrap();
    assert!(nearly(red.value("stream/clang/autovec", "reduction").unwrap(), 2.8, 0.005));
}

#[test]
fn rerun_is_identical_except_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let strip = |mut v: Vec<CampaignRecord>| {
        for r in &mut v {
            r.recorded_at = 0;
        }
        v
    };
    let a = strip(run_full(&dir.path().join("a"), &dir.path().join("wa")));
    let b = strip(run_full(&dir.path().join("b"), &dir.path().join("wb")));
    assert_eq!(a, b);
    // Appending again keeps history and the latest view stays the same size.
    let store_a = dir.path().join("a");
    run_full(&store_a, &dir.path().join("wa"));
    let store = ResultsStore::new(&store_a);
    assert_eq!(store.load().unwrap().len(), 172);
    assert_eq!(strip(store.latest().unwrap()), a);
}

#[test]
fn fake_compiler_records_flags_in_build_logs() {
    let dir = tempfile::tempdir().unwrap();
    let work = dir.path().join("work");
    let records = run_full(&dir.path().join("results"), &work);
    assert!(records.iter().any(|r| r.mode == Mode::Intrinsics));
    let log = std::fs::read_to_string(work.join("builds/sgemm__clang__autovec__lmul2.log")).unwrap();
    assert!(log.contains("-riscv-v-register-bit-width-lmul=2"), "{log}");
    assert!(log.contains("-scalable-vectorization=on"), "{log}");
    assert!(work.join("builds/sgemm__clang__autovec__lmul2.vecreport").exists());
    assert!(!work.join("builds/sgemm__gcc__nonvec.vecreport").exists());
    let log = std::fs::read_to_string(work.join("builds/qsim__gcc__intrinsics.log")).unwrap();
    assert!(log.contains("-DUSE_RVV"), "{log}");
}
