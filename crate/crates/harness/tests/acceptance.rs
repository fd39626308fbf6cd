//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rvvprobe_core::analytics::{overhead_fraction, throughput, ThroughputResult};
use rvvprobe_core::kernelgen::{generate_kernel, generate_suite, KernelSpec, Pattern, SuiteKind, SuiteOptions};
use rvvprobe_core::refmodel::{parse_kernel, predict_counts};
use rvvprobe_core::sim::{run_kernel_text, run_module};
use rvvprobe_core::vtype::{compute_vlmax, Lmul, Sew, VectorConfig};
use rvvprobe_core::{calibrate_suite, CalibrationParams, EventKind, RawSample};
use rvvprobe_harness::campaign::{
    expand_matrix, run_campaign, CampaignContext, CampaignReplay, CompilerFile, ManifestFile, ReplayAppRunner,
    LMUL_LEVELS,
};
use rvvprobe_harness::replay::ReplayFixture;
use rvvprobe_harness::report::{render, ReportKind, ReportRequest};
use rvvprobe_harness::store::ResultsStore;

const ORACLE_ITERATIONS: [u64; 3] = [1, 10, 1000];
const ORACLE_MIN_SPECS: usize = 40;
const ORACLE_BUDGET: Duration = Duration::from_secs(120);
const RETIRED_ERROR_RANGE: (f64, f64) = (0.015, 0.032);
const GOPS_TOLERANCE: f64 = 0.01;
const OVERHEAD_TOLERANCE: f64 = 0.0001;
const OVERHEAD_PROSE: f64 = 0.351;
const OVERHEAD_PROSE_TOLERANCE: f64 = 0.01;
/// Fixture values are stored at nanosecond and unit-count resolution.
const CAMPAIGN_TOLERANCE: f64 = 0.005;
const CLASSIFIER_DATASETS: u32 = 1000;

type Outcome = Result<String, String>;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name} = {got:.4}, expected {want} ± {tol}"))
}

fn oracle_equivalence() -> Outcome {
    let cfg = VectorConfig::new(256).map_err(|e| e.to_string())?;
    let opts = SuiteOptions {
        lmuls: Lmul::INTEGRAL.to_vec(),
        ..SuiteOptions::default()
    };
    let specs: Vec<KernelSpec> = SuiteKind::ALL
        .into_iter()
        .flat_map(|k| generate_suite(k, &cfg, &opts))
        .collect();
    ensure(specs.len() >= ORACLE_MIN_SPECS, || format!("only {} specs", specs.len()))?;
    let sews: std::collections::BTreeSet<u32> = specs.iter().map(|s| s.sew.bits()).collect();
    let lmuls: std::collections::BTreeSet<String> = specs.iter().map(|s| s.lmul.to_string()).collect();
    ensure(sews.len() == 4 && lmuls.len() == 4, || format!("coverage sew {sews:?} lmul {lmuls:?}"))?;

    let start = Instant::now();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get());
    let chunk = specs.len().div_ceil(workers);
    let failures: Vec<String> = std::thread::scope(|s| {
        let handles: Vec<_> = specs
            .chunks(chunk)
            .map(|part| {
                let cfg = &cfg;
                s.spawn(move || {
                    let mut bad = Vec::new();
                    for spec in part {
                        let module = match generate_kernel(spec, cfg) {
                            Ok(m) => m,
                            Err(e) => {
                                bad.push(format!("{}: {e}", spec.name));
                                continue;
                            }
                        };
                        let parsed = parse_kernel(&module.text).expect("generated kernel parses");
                        for n in ORACLE_ITERATIONS {
                            let predicted = predict_counts(&parsed, n).expect("prediction");
                            match run_module(&module, cfg, n) {
                                Ok(run) if run.stats.counts == predicted.counts
                                    && run.stats.target_inst_count == predicted.target_inst_count => {}
                                Ok(run) => bad.push(format!(
                                    "{} x{n}: predicted {:?}, simulated {:?}",
                                    spec.name, predicted.counts, run.stats.counts
                                )),
                                Err(e) => bad.push(format!("{} x{n}: {e}", spec.name)),
                            }
                        }
                    }
                    bad
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("oracle worker")).collect()
    });
    let elapsed = start.elapsed();
    ensure(failures.is_empty(), || format!("{} mismatches, first: {}", failures.len(), failures[0]))?;
    ensure(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} specs x {:?} iterations identical in {:.1}s",
        specs.len(),
        ORACLE_ITERATIONS,
        elapsed.as_secs_f64()
    ))
}

fn counter_replay() -> Outcome {
    let f = ReplayFixture::load(&data("fixtures/x60_counters.json")).map_err(|e| e.to_string())?;
    let refs = f.references().map_err(|e| e.to_string())?;
    let report = calibrate_suite(&f.samples(), &refs, &CalibrationParams::default());
    use EventKind as E;
    let usable = [E::Retired, E::VecLd, E::VecSt, E::FpLd, E::FpSt];
    ensure(report.usable == usable, || format!("usable {:?}", report.usable))?;
    ensure(report.excluded == [E::Vec, E::Fp], || format!("excluded {:?}", report.excluded))?;
    let retired = report.verdict(E::Retired).ok_or("no retired verdict")?;
    let errors: Vec<f64> = retired.per_kernel.iter().filter_map(|c| c.relative_error).collect();
    ensure(errors.len() == 10, || format!("{} retired checks", errors.len()))?;
    for (c, e) in retired.per_kernel.iter().zip(&errors) {
        ensure((RETIRED_ERROR_RANGE.0..=RETIRED_ERROR_RANGE.1).contains(e), || {
            format!("{} retired error {e:.4} outside {RETIRED_ERROR_RANGE:?}", c.kernel)
        })?;
    }
    let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().copied().fold(0.0, f64::max);
    Ok(format!("usable {:?}; retired errors {:.2}%..{:.2}%", report.usable, lo * 100.0, hi * 100.0))
}

fn fill(sew: Sew) -> impl FnOnce(&mut [u8]) {
    move |buf: &mut [u8]| {
        let b = sew.bytes();
        for (i, chunk) in buf.chunks_exact_mut(b).enumerate() {
            chunk.copy_from_slice(&(i as u64 + 1).to_le_bytes()[..b]);
        }
    }
}

fn stride_mask_equivalence() -> Outcome {
    let cfg = VectorConfig::new(256).map_err(|e| e.to_string())?;
    let specs = generate_suite(SuiteKind::StrideCompare, &cfg, &SuiteOptions::default());
    let mut checked = 0;
    for strided in specs.iter().filter(|s| s.pattern == Pattern::StridedLoad) {
        ensure(strided.stride_elems == 2, || format!("{} stride {}", strided.name, strided.stride_elems))?;
        let masked = specs
            .iter()
            .find(|s| s.pattern == Pattern::MaskedUnitLoad && s.sew == strided.sew && s.lmul == strided.lmul)
            .ok_or_else(|| format!("no masked partner for {}", strided.name))?;
        let vl = compute_vlmax(&cfg, strided.sew, strided.lmul).map_err(|e| e.to_string())? as usize;
        let group = strided.lmul.group_regs() as u8;
        let run = |spec: &KernelSpec| {
            let m = generate_kernel(spec, &cfg).map_err(|e| e.to_string())?;
            run_kernel_text(&m.text, &cfg, m.buffer_bytes, 1, Some(&spec.target_inst), fill(spec.sew))
                .map_err(|e| format!("{}: {e}", spec.name))
        };
        let a = run(strided)?;
        let b = run(masked)?;
        let mut from_strided: Vec<u64> = (0..vl).map(|i| a.state.velem(0, strided.sew, i)).collect();
        let mut from_masked = Vec::new();
        for chunk in 0..2u8 {
            let vreg = 8 + chunk * group;
            from_masked.extend((0..vl).step_by(2).map(|i| b.state.velem(vreg, masked.sew, i)));
        }
        from_strided.sort_unstable();
        from_masked.sort_unstable();
        ensure(from_strided == from_masked, || format!("{}: gathered elements differ", strided.name))?;

        let per_trip = |spec: &KernelSpec| -> Result<(u64, u64), String> {
            let parsed = parse_kernel(&generate_kernel(spec, &cfg).map_err(|e| e.to_string())?.text)
                .map_err(|e| e.to_string())?;
            let loads = parsed.body_counts()[EventKind::VecLd];
            let issued = predict_counts(&parsed, spec.iterations).map_err(|e| e.to_string())?.counts[EventKind::VecLd];
            Ok((loads, issued))
        };
        let (s_body, s_total) = per_trip(strided)?;
        let (m_body, m_total) = per_trip(masked)?;
        ensure(m_body == 2 * s_body, || format!("{}: loop loads {m_body} vs {s_body}", strided.name))?;
        ensure(m_total == 2 * s_total, || format!("{}: issued loads {m_total} vs {s_total}", strided.name))?;
        checked += 1;
    }
    ensure(checked == 4, || format!("checked {checked} SEWs"))?;
    Ok(format!("{checked} SEWs: same elements, masked issues 2x the vector loads"))
}

fn throughput_arithmetic() -> Outcome {
    let cfg = VectorConfig::new(256).map_err(|e| e.to_string())?;
    let spec = |sew: Sew| KernelSpec::new(&format!("vle{}.v", sew.bits()), sew, Lmul::M1, Pattern::UnitLoad);
    // 10^8 trips x 128 loads x 32 bytes at 28.4 Gops/s.
    let e8_ops = 100_000_000u64 * 128 * 32;
    let elapsed = (e8_ops as f64 / 28.4).round() as u64;
    let mut got = Vec::new();
    for (sew, want) in [(Sew::E8, 28.4), (Sew::E16, 14.2), (Sew::E32, 7.1), (Sew::E64, 3.55)] {
        let s = spec(sew);
        let sample = RawSample::new(&s.name, 1, elapsed, Default::default());
        let r = throughput::<f64>(&s, &cfg, &sample).map_err(|e| e.to_string())?;
        within(&s.name, r.gops_per_sec, want, GOPS_TOLERANCE)?;
        got.push(format!("{:.3}", r.gops_per_sec));
    }
    Ok(format!("e8/e16/e32/e64 = {}", got.join("/")))
}

fn tp(gops: f64) -> ThroughputResult<f64> {
    ThroughputResult {
        kernel: String::new(),
        element_ops_total: 0,
        elapsed_ns: 1,
        gops_per_sec: gops,
        elements_per_inst: 1,
    }
}

fn mask_overhead() -> Outcome {
    let a = overhead_fraction(&tp(28.4), &tp(18.5));
    let b = overhead_fraction(&tp(25.2), &tp(16.4));
    within("overhead(28.4, 18.5)", a, 0.3486, OVERHEAD_TOLERANCE)?;
    within("overhead(25.2, 16.4)", b, 0.3492, OVERHEAD_TOLERANCE)?;
    within("overhead(28.4, 18.5) vs prose", a, OVERHEAD_PROSE, OVERHEAD_PROSE_TOLERANCE)?;
    within("overhead(25.2, 16.4) vs prose", b, OVERHEAD_PROSE, OVERHEAD_PROSE_TOLERANCE)?;
    Ok(format!("{a:.4} and {b:.4}"))
}

fn campaign_store(apps_filter: Option<&str>, lmuls: &[u32], dir: &Path) -> Result<Vec<rvvprobe_harness::store::CampaignRecord>, String> {
    let mut apps = ManifestFile::load(&data("campaign/apps.toml")).map_err(|e| e.to_string())?.apps;
    if let Some(name) = apps_filter {
        apps.retain(|a| a.name == name);
    }
    let compilers = CompilerFile::load(&data("campaign/compilers_fake.toml")).map_err(|e| e.to_string())?.compilers;
    let jobs = expand_matrix(&apps, &compilers, lmuls).map_err(|e| e.to_string())?;
    let f = ReplayFixture::load(&data("fixtures/x60_counters.json")).map_err(|e| e.to_string())?;
    let cal = calibrate_suite(&f.samples(), &f.references().map_err(|e| e.to_string())?, &CalibrationParams::default());
    let ctx = CampaignContext {
        apps: &apps,
        compilers: &compilers,
        calibration: &cal,
        baseline: "gcc:nonvec".parse().map_err(|e: rvvprobe_harness::campaign::CampaignError| e.to_string())?,
        runs: 5,
        work_dir: &dir.join("work"),
    };
    let replay = CampaignReplay::load(&data("fixtures/campaign_jupiter.json")).map_err(|e| e.to_string())?;
    let mut runner = ReplayAppRunner::new(replay);
    let store = ResultsStore::new(dir.join("results"));
    run_campaign(&jobs, &ctx, &mut runner, &store).map_err(|e| e.to_string())?;
    store.load().map_err(|e| e.to_string())
}

fn campaign_math() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    campaign_store(None, &LMUL_LEVELS, dir.path())?;
    let store = dir.path().join("results");
    let doc = |kind, relative: Option<&str>| {
        let mut req = ReportRequest::new(kind, vec![store.clone()]);
        req.relative_to = relative.map(str::to_string);
        render(&req).map_err(|e| e.to_string())
    };
    let speed = doc(ReportKind::SpeedupBars, None)?;
    let red = doc(ReportKind::ReductionBars, None)?;
    let sweep = doc(ReportKind::LmulSweep, None)?;
    let own = doc(ReportKind::SpeedupBars, Some("clang:nonvec"))?;
    let get = |d: &rvvprobe_harness::report::Document, id: &str, m: &str| {
        d.value(id, m).ok_or_else(|| format!("report lacks {m} for {id}"))
    };
    let checks = [
        ("SGEMM clang autovec speedup", get(&speed, "sgemm/clang/autovec", "speedup")?, 2.4),
        ("SGEMM gcc autovec speedup", get(&speed, "sgemm/gcc/autovec", "speedup")?, 1.85),
        ("SGEMM clang autovec reduction", get(&red, "sgemm/clang/autovec", "reduction")?, 4.7),
        ("YOLOv3 gcc LMUL8 reduction", get(&sweep, "yolov3/gcc/autovec/lmul8", "reduction")?, 13.1),
        ("YOLOv3 gcc LMUL8 speedup", get(&sweep, "yolov3/gcc/autovec/lmul8", "speedup")?, 1.2),
        ("Qsim clang intrinsics over clang nonvec", get(&own, "qsim/clang/intrinsics", "speedup")?, 1.6),
    ];
    let mut parts = Vec::new();
    for (name, got, want) in checks {
        within(name, got, want, CAMPAIGN_TOLERANCE)?;
        parts.push(format!("{got:.3}"));
    }
    Ok(format!("2.4/1.85/4.7/13.1/1.2/1.6 reproduced as {}", parts.join("/")))
}

fn generator_determinism() -> Outcome {
    let mut n = 0;
    for vlen in [128, 256, 1024] {
        let cfg = VectorConfig::new(vlen).map_err(|e| e.to_string())?;
        let opts = SuiteOptions {
            lmuls: Lmul::INTEGRAL.to_vec(),
            ..SuiteOptions::default()
        };
        for kind in SuiteKind::ALL {
            for spec in generate_suite(kind, &cfg, &opts) {
                let a = generate_kernel(&spec, &cfg).map_err(|e| format!("{}: {e}", spec.name))?;
                let b = generate_kernel(&spec, &cfg).map_err(|e| format!("{}: {e}", spec.name))?;
                ensure(a.text == b.text && a.sidecar_json() == b.sidecar_json(), || {
                    format!("{} differs between generations", spec.name)
                })?;
                let parsed = parse_kernel(&a.text).map_err(|e| format!("{}: {e}", spec.name))?;
                let count = predict_counts(&parsed, spec.iterations).map_err(|e| e.to_string())?.target_inst_count;
                ensure(count == spec.iterations * spec.unroll as u64, || {
                    format!("{}: {count} target instructions, expected {}", spec.name, spec.iterations * spec.unroll as u64)
                })?;
                n += 1;
            }
        }
    }
    Ok(format!("{n} kernels byte-identical with target count = iterations x unroll"))
}

fn classifier_properties() -> Outcome {
    let params = |tolerance| CalibrationParams {
        tolerance,
        floor: 1e6,
        min_runs: 3,
    };
    let mut runner = TestRunner::new(Config {
        cases: CLASSIFIER_DATASETS,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (common::dataset(), 0.0f64..0.2, 0.0f64..0.2);
    runner
        .run(&strategy, |(data, a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let strict = calibrate_suite(&data.samples, &data.references, &params(lo));
            let loose = calibrate_suite(&data.samples, &data.references, &params(hi));
            if let Some(e) = strict.usable.iter().find(|e| !loose.usable.contains(e)) {
                return Err(TestCaseError::fail(format!("{e} usable at {lo} but not {hi}")));
            }
            Ok(())
        })
        .map_err(|e| format!("monotonicity: {e}"))?;
    use proptest::strategy::{Just, Strategy};
    let shuffled = common::dataset().prop_flat_map(|d| {
        let s = Just(d.samples.clone()).prop_shuffle();
        (Just(d), s)
    });
    runner
        .run(&shuffled, |(data, perm)| {
            let a = calibrate_suite(&data.samples, &data.references, &params(0.05));
            let b = calibrate_suite(&perm, &data.references, &params(0.05));
            if a != b {
                return Err(TestCaseError::fail("report changed under permutation"));
            }
            Ok(())
        })
        .map_err(|e| format!("permutation invariance: {e}"))?;
    Ok(format!("monotonicity and permutation invariance over {CLASSIFIER_DATASETS} datasets each"))
}

fn fake_compiler_campaign() -> Outcome {
    let apps = ManifestFile::load(&data("campaign/apps.toml")).map_err(|e| e.to_string())?.apps;
    let compilers = CompilerFile::load(&data("campaign/compilers_fake.toml")).map_err(|e| e.to_string())?.compilers;
    let sgemm: Vec<_> = apps.into_iter().filter(|a| a.name == "sgemm").collect();
    let jobs = expand_matrix(&sgemm, &compilers, &LMUL_LEVELS).map_err(|e| e.to_string())?;
    ensure(compilers.len() == 2 && jobs.len() == 12, || format!("{} compilers, {} jobs", compilers.len(), jobs.len()))?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let records = campaign_store(Some("sgemm"), &LMUL_LEVELS, dir.path())?;
    ensure(records.len() == 12, || format!("{} records stored", records.len()))?;
    let base: Vec<_> = records.iter().filter(|r| r.is_baseline()).collect();
    ensure(base.len() == 1, || format!("{} baseline records", base.len()))?;
    ensure(base[0].speedup == Some(1.0), || format!("baseline speedup {:?}", base[0].speedup))?;
    Ok(format!("12 jobs; baseline {} has speedup exactly 1.0", base[0].id))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("counter table replay", counter_replay),
        ("stride/mask functional equivalence", stride_mask_equivalence),
        ("throughput arithmetic", throughput_arithmetic),
        ("mask overhead metric", mask_overhead),
        ("campaign math replay", campaign_math),
        ("generator determinism and budget", generator_determinism),
        ("classifier properties", classifier_properties),
        ("fake-compiler campaign", fake_compiler_campaign),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
