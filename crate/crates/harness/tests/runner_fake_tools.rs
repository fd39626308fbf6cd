//! The runner against stand-in `taskset` and `perf` scripts.
#![cfg(unix)]

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use rvvprobe_core::EventKind;
use rvvprobe_harness::platform::{PlatformConfig, PlatformInfo};
use rvvprobe_harness::runner::{BenchmarkRunner, Invocation, RunError, Timing};

const TASKSET: &str = r#"#!/bin/sh
# taskset -c <cpus> cmd...
[ "$1" = "-c" ] || exit 64
echo "$2" >> "$(dirname "$0")/pinned.log"
shift 2
exec "$@"
"#;

/// Writes one CSV row per `-e` selector to the `-o` file, then runs the command.
const PERF: &str = r#"#!/bin/sh
[ "$1" = "stat" ] || exit 64
shift
out=""
sels=""
while [ "$#" -gt 0 ]; do
  case "$1" in
    -x,) shift ;;
    -e) sels="$sels $2"; shift 2 ;;
    -o) out="$2"; shift 2 ;;
    --) shift; break ;;
    *) exit 64 ;;
  esac
done
"$@"
status=$?
n=0
for s in $sels; do
  n=$((n + 1))
  if [ "$s" = "r_missing" ]; then
    echo "<not counted>,,$s,0,0.00,," >> "$out"
  elif [ "$s" = "r_mux" ]; then
    echo "$((1000 * n)),,$s,500,50.00,," >> "$out"
  else
    echo "$((12800000000 + n)),,$s:u,1000,100.00,," >> "$out"
  fi
done
exit $status
"#;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    std::fs::set_permissions(&p, std::fs::Permissions::from_mode(0o755)).unwrap();
    p
}

fn setup(kernel_body: &str) -> (tempfile::TempDir, BenchmarkRunner, Invocation) {
    let dir = tempfile::tempdir().unwrap();
    let taskset = script(dir.path(), "taskset", TASKSET);
    let perf = script(dir.path(), "perf", PERF);
    let bin = script(dir.path(), "bench", kernel_body);
    let cfg = PlatformConfig::parse(
        r#"
        vlen_bits = 256
        core_count = 8
        [event_map]
        vec-ld-ins = "r_vecld"
        vec-ins = "r_missing"
        fp-ins = "r_mux"
        "#,
    )
    .unwrap();
    let mut runner = BenchmarkRunner::new(PlatformInfo::resolve(&cfg, None).unwrap());
    runner.perf = perf;
    runner.taskset = taskset;
    let inv = Invocation {
        kernel_name: "unit-load_vle8.v_e8_m1".into(),
        binary: bin,
        args: vec!["100000000".into()],
        env: vec![],
        timing: Timing::Driver {
            expected_iterations: Some(100_000_000),
        },
    };
    (dir, runner, inv)
}

const DRIVER: &str = "#!/bin/sh\necho elapsed_ns=14422535211\necho iterations=$1\n";

#[test]
fn collects_one_sample_per_run_in_order() {
    let (dir, runner, inv) = setup(DRIVER);
    let samples = runner.run_benchmark(&inv, &[EventKind::Retired, EventKind::VecLd], 5, 3).unwrap();
    assert_eq!(samples.len(), 5);
    for (i, s) in samples.iter().enumerate() {
        assert_eq!(s.run_index, i as u32 + 1);
        assert_eq!(s.elapsed_ns, 14_422_535_211);
        assert_eq!(s.counts.retired, Some(12_800_000_001));
        assert_eq!(s.counts.vec_ld, Some(12_800_000_002));
        assert_eq!(s.counts.vec, None);
        assert!(s.succeeded());
    }
    let pinned = std::fs::read_to_string(dir.path().join("pinned.log")).unwrap();
    assert_eq!(pinned, "3\n".repeat(5));
}

#[test]
fn not_counted_and_multiplexed_are_flagged() {
    let (_dir, runner, inv) = setup(DRIVER);
    let s = &runner
        .run_benchmark(&inv, &[EventKind::Retired, EventKind::Vec, EventKind::Fp], 1, 0)
        .unwrap()[0];
    assert_eq!(s.counts.vec, None);
    assert_eq!(s.not_counted, vec![EventKind::Vec]);
    assert_eq!(s.multiplexed, vec![EventKind::Fp]);
    assert_eq!(s.trusted(EventKind::Fp), None);
    assert_eq!(s.trusted(EventKind::Retired), Some(12_800_000_001));
}

#[test]
fn failing_run_discards_the_batch() {
    let flaky = "#!/bin/sh\nn=$(cat \"$(dirname \"$0\")/count\" 2>/dev/null || echo 0)\nn=$((n+1))\necho $n > \"$(dirname \"$0\")/count\"\n[ $n -eq 3 ] && exit 7\necho elapsed_ns=5\necho iterations=$1\n";
    let (_dir, runner, inv) = setup(flaky);
    match runner.run_benchmark(&inv, &[EventKind::Retired], 5, 0) {
        Err(RunError::NonZeroExit { run: 3, status: 7, .. }) => {}
        other => panic!("expected run 3 to fail, got {other:?}"),
    }
}

#[test]
fn iteration_mismatch_and_missing_protocol_lines() {
    let (_dir, runner, inv) = setup("#!/bin/sh\necho elapsed_ns=5\necho iterations=7\n");
    assert!(matches!(
        runner.run_benchmark(&inv, &[EventKind::Retired], 1, 0),
        Err(RunError::IterationMismatch { reported: 7, .. })
    ));
    let (_dir, runner, inv) = setup("#!/bin/sh\necho hello\n");
    assert!(matches!(runner.run_benchmark(&inv, &[EventKind::Retired], 1, 0), Err(RunError::Parse { .. })));
}

#[test]
fn wall_clock_timing_for_applications() {
    let (_dir, runner, mut inv) = setup("#!/bin/sh\necho result: OK\n");
    inv.timing = Timing::WallClock;
    let runs = runner
        .run_capture(&inv, &[EventKind::Retired], 2, &"0-3".parse().unwrap())
        .unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs[0].0.elapsed_ns > 0);
    assert_eq!(runs[0].1, "result: OK\n");
}
