//! Sequential, core-pinned execution of benchmark binaries under `perf stat`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rvvprobe_core::{EventKind, RawSample};
use thiserror::Error;

use crate::perf::{parse_driver_output, parse_elapsed_line, parse_perf_output, perf_command, ParseError};
use crate::platform::{PlatformError, PlatformInfo};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Platform(#[from] PlatformError),
    #[error("runs must be positive")]
    ZeroRuns,
    #[error("`{0}` not found or not executable")]
    MissingTool(PathBuf),
    #[error("benchmark binary {0} does not exist or is not executable")]
    MissingBinary(PathBuf),
    #[error("core {core} is outside the platform's {count} cores")]
    BadCore { core: u32, count: u32 },
    #[error("invalid CPU list `{0}`")]
    BadCpuList(String),
    #[error("run {run} of {binary}: {message}")]
    Launch { run: u32, binary: PathBuf, message: String },
    #[error("run {run} of {binary} exited with status {status}; the batch is discarded")]
    NonZeroExit { run: u32, binary: PathBuf, status: i32 },
    #[error("run {run} of {binary}: {source}")]
    Parse {
        run: u32,
        binary: PathBuf,
        #[source]
        source: ParseError,
    },
    #[error("run {run} of {binary} reported {reported} iterations, expected {expected}")]
    IterationMismatch {
        run: u32,
        binary: PathBuf,
        reported: u64,
        expected: u64,
    },
}

/// Where the elapsed time of a run comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// The kernel driver's `elapsed_ns=` line; `iterations=` must match when given.
    Driver { expected_iterations: Option<u64> },
    /// An `elapsed_ns=` line if the program prints one, else wall-clock time.
    WallClock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub kernel_name: String,
    pub binary: PathBuf,
    pub args: Vec<String>,
    pub env: Vec<(String, String)>,
    pub timing: Timing,
}

/// Drives `perf stat` over one binary at a time.
#[derive(Debug, Clone)]
pub struct BenchmarkRunner {
    pub platform: PlatformInfo,
    pub perf: PathBuf,
    pub taskset: PathBuf,
}

/// A taskset-style CPU list such as `3` or `0-3,6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpuSet {
    text: String,
    cpus: Vec<u32>,
}

impl CpuSet {
    pub fn single(core: u32) -> CpuSet {
        CpuSet {
            text: core.to_string(),
            cpus: vec![core],
        }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn cpus(&self) -> &[u32] {
        &self.cpus
    }
}

impl std::str::FromStr for CpuSet {
    type Err = RunError;
    fn from_str(s: &str) -> Result<CpuSet, RunError> {
        let bad = || RunError::BadCpuList(s.to_string());
        let mut cpus = Vec::new();
        for part in s.split(',') {
            let (lo, hi) = match part.split_once('-') {
                Some((a, b)) => (a.trim().parse::<u32>().map_err(|_| bad())?, b.trim().parse::<u32>().map_err(|_| bad())?),
                None => {
                    let v = part.trim().parse::<u32>().map_err(|_| bad())?;
                    (v, v)
                }
            };
            if lo > hi {
                return Err(bad());
            }
            cpus.extend(lo..=hi);
        }
        cpus.sort_unstable();
        cpus.dedup();
        Ok(CpuSet {
            text: s.trim().to_string(),
            cpus,
        })
    }
}

static SCRATCH_SEQ: AtomicU64 = AtomicU64::new(0);

/// Resolve a bare program name through `PATH`.
pub fn find_executable(name: &Path) -> Option<PathBuf> {
    if name.components().count() > 1 {
        return is_executable(name).then(|| name.to_path_buf());
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|d| d.join(name))
        .find(|p| is_executable(p))
}

fn is_executable(p: &Path) -> bool {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        p.metadata().is_ok_and(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
    }
    #[cfg(not(unix))]
    {
        p.is_file()
    }
}

impl BenchmarkRunner {
    pub fn new(platform: PlatformInfo) -> BenchmarkRunner {
        BenchmarkRunner {
            platform,
            perf: PathBuf::from("perf"),
            taskset: PathBuf::from("taskset"),
        }
    }

    /// Resolve every requested event to its selector, naming the first unmapped one.
    pub fn selectors(&self, events: &[EventKind]) -> Result<Vec<(EventKind, String)>, RunError> {
        events
            .iter()
            .map(|&e| Ok((e, self.platform.selector(e)?.to_string())))
            .collect()
    }

    /// Run `inv` `runs` times, strictly one after another, pinned to `core`.
    /// Either every run succeeds or the whole batch is an error.
    pub fn run_benchmark(
        &self,
        inv: &Invocation,
        events: &[EventKind],
        runs: u32,
        core: u32,
    ) -> Result<Vec<RawSample>, RunError> {
        let runs = self.run_capture(inv, events, runs, &CpuSet::single(core))?;
        Ok(runs.into_iter().map(|(s, _)| s).collect())
    }

    /// As [`run_benchmark`](Self::run_benchmark) over a CPU list, also
    /// returning each run's standard output.
    pub fn run_capture(
        &self,
        inv: &Invocation,
        events: &[EventKind],
        runs: u32,
        cpus: &CpuSet,
    ) -> Result<Vec<(RawSample, String)>, RunError> {
        if runs == 0 {
            return Err(RunError::ZeroRuns);
        }
        let selectors = self.selectors(events)?;
        if let Some(&core) = cpus.cpus().iter().find(|&&c| c >= self.platform.core_count) {
            return Err(RunError::BadCore {
                core,
                count: self.platform.core_count,
            });
        }
        let perf = find_executable(&self.perf).ok_or_else(|| RunError::MissingTool(self.perf.clone()))?;
        let taskset = find_executable(&self.taskset).ok_or_else(|| RunError::MissingTool(self.taskset.clone()))?;
        if !is_executable(&inv.binary) {
            return Err(RunError::MissingBinary(inv.binary.clone()));
        }
        let mut samples = Vec::with_capacity(runs as usize);
        for run in 1..=runs {
            samples.push(self.run_once(inv, &selectors, run, cpus.as_str(), &perf, &taskset)?);
        }
        Ok(samples)
    }

    fn run_once(
        &self,
        inv: &Invocation,
        selectors: &[(EventKind, String)],
        run: u32,
        cpus: &str,
        perf: &Path,
        taskset: &Path,
    ) -> Result<(RawSample, String), RunError> {
        let scratch = std::env::temp_dir().join(format!(
            "rvvprobe-perf-{}-{}.csv",
            std::process::id(),
            SCRATCH_SEQ.fetch_add(1, Ordering::Relaxed)
        ));
        let mut argv = perf_command(taskset, perf, cpus, selectors, &inv.binary, &inv.args);
        // Keep counter rows apart from whatever the program writes to stderr.
        let sep = argv.iter().position(|a| a == "--").expect("command has a separator");
        argv.splice(sep..sep, [OsString::from("-o"), scratch.clone().into_os_string()]);

        let launch = |message: String| RunError::Launch {
            run,
            binary: inv.binary.clone(),
            message,
        };
        let start = Instant::now();
        let output = Command::new(&argv[0])
            .args(&argv[1..])
            .envs(inv.env.iter().map(|(k, v)| (k, v)))
            .output()
            .map_err(|e| launch(e.to_string()))?;
        let wall_ns = start.elapsed().as_nanos() as u64;
        let perf_text = std::fs::read_to_string(&scratch);
        let _ = std::fs::remove_file(&scratch);

        let status = output.status.code().unwrap_or(-1);
        if status != 0 {
            return Err(RunError::NonZeroExit {
                run,
                binary: inv.binary.clone(),
                status,
            });
        }
        let parse_err = |source| RunError::Parse {
            run,
            binary: inv.binary.clone(),
            source,
        };
        let perf_text = perf_text.map_err(|e| launch(format!("counter output missing: {e}")))?;
        let reading = parse_perf_output(&perf_text, selectors).map_err(parse_err)?;
        let stdout = String::from_utf8_lossy(&output.stdout);
        let elapsed_ns = match inv.timing {
            Timing::Driver { expected_iterations } => {
                let report = parse_driver_output(&stdout).map_err(parse_err)?;
                if let Some(expected) = expected_iterations.filter(|&n| n != report.iterations) {
                    return Err(RunError::IterationMismatch {
                        run,
                        binary: inv.binary.clone(),
                        reported: report.iterations,
                        expected,
                    });
                }
                report.elapsed_ns
            }
            Timing::WallClock => parse_elapsed_line(&stdout).unwrap_or(wall_ns),
        };
        let mut sample = RawSample::new(&inv.kernel_name, run, elapsed_ns, reading.counts);
        sample.multiplexed = reading.multiplexed;
        sample.not_counted = reading.not_counted;
        Ok((sample, stdout.into_owned()))
    }
}
