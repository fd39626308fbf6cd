//! Compiler × vectorization mode × LMUL campaigns over external
//! applications.
//!
//! Build templates are tokenised with shell quoting rules and executed
//! without a shell. Placeholders:
//!
//! | placeholder | meaning |
//! |---|---|
//! | `{CC}` | compiler executable |
//! | `{CFLAGS}` | full flag list for the job, as separate arguments |
//! | `{OUT}` | output binary path |
//! | `{SRC_DIR}` | the app's source directory |
//! | `{BIN}` | the built binary (run templates only) |

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::str::FromStr;

use rvvprobe_core::{analytics, CalibrationReport, EventKind, PartialCounts, RawSample};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::replay::FixtureRun;
use crate::runner::{find_executable, BenchmarkRunner, CpuSet, Invocation, Timing};
use crate::store::{CampaignRecord, ResultsStore, StoreError, SCHEMA_VERSION};

pub const DEFAULT_BASELINE: &str = "gcc:nonvec";
pub const DEFAULT_RUNS: u32 = 5;
/// LMUL levels a compiler flag template can request.
pub const LMUL_LEVELS: [u32; 4] = [1, 2, 4, 8];

const SHELL_META: [char; 8] = [';', '|', '&', '`', '$', '<', '>', '\n'];

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("the campaign matrix is empty: {0}")]
    Empty(&'static str),
    #[error("duplicate job `{0}`")]
    DuplicateJob(String),
    #[error("LMUL {0} is not one of 1, 2, 4, 8")]
    BadLmul(u32),
    #[error("app `{app}` has no baseline job `{key}` in the matrix")]
    MissingBaseline { app: String, key: String },
    #[error("invalid baseline key `{0}`; expected <compiler>:<mode>")]
    BadBaseline(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("compiler `{0}` not found")]
    MissingCompiler(String),
    #[error("build of {job} failed (exit {status}); log at {}", log.display())]
    Compile { job: String, status: i32, log: PathBuf },
    #[error("build of {job}: {message}")]
    Other { job: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Validator {
    StdoutContains(String),
    ExitCode(i32),
}

impl Validator {
    pub fn check(&self, stdout: &str, exit_status: i32) -> Result<(), String> {
        match self {
            Validator::StdoutContains(s) if !stdout.contains(s.as_str()) => {
                Err(format!("output does not contain `{s}`"))
            }
            Validator::ExitCode(c) if *c != exit_status => Err(format!("exit status {exit_status}, expected {c}")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppManifest {
    pub name: String,
    /// Build command template.
    pub build: String,
    /// Template for a hand-vectorised variant; adds an `intrinsics` job when set.
    #[serde(default)]
    pub intrinsics_build: Option<String>,
    /// Run command template, e.g. `{BIN} 512`.
    pub run: String,
    pub validate: Validator,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    /// Source directory, relative to the manifest file.
    #[serde(default)]
    pub src_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    #[serde(rename = "app")]
    pub apps: Vec<AppManifest>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Process,
    /// Copies a prebuilt binary (or writes a stub) and records the flags it was given.
    Fake,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompilerConfig {
    pub id: String,
    pub cc: String,
    #[serde(default)]
    pub backend: BackendKind,
    #[serde(default)]
    pub prebuilt: Option<PathBuf>,
    #[serde(default)]
    pub base_flags: Vec<String>,
    pub nonvec_flags: Vec<String>,
    pub autovec_flags: Vec<String>,
    /// Appended to the autovec flags for LMUL jobs; `{LMUL}` is substituted.
    pub lmul_flags: Vec<String>,
    /// Flags for intrinsics builds; defaults to the autovec flags.
    #[serde(default)]
    pub intrinsics_flags: Option<Vec<String>>,
    /// Extra flags asking the compiler for a vectorization report.
    #[serde(default)]
    pub vec_report_flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompilerFile {
    #[serde(rename = "compiler")]
    pub compilers: Vec<CompilerConfig>,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CampaignError> {
    let text = std::fs::read_to_string(path).map_err(|source| CampaignError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| CampaignError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

impl ManifestFile {
    /// Load and validate; `src_dir` becomes absolute against the file.
    pub fn load(path: &Path) -> Result<ManifestFile, CampaignError> {
        let mut file: ManifestFile = read_toml(path)?;
        let base = parent_dir(path);
        for app in &mut file.apps {
            app.src_dir = Some(relative_to(&base, app.src_dir.as_deref().unwrap_or(Path::new("."))));
        }
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), CampaignError> {
        for app in &self.apps {
            if app.name.is_empty() || app.name.contains(['/', ':']) {
                return Err(CampaignError::Invalid(format!("app name `{}` must be non-empty without `/` or `:`", app.name)));
            }
            let templates = [Some(&app.build), app.intrinsics_build.as_ref(), Some(&app.run)];
            for t in templates.into_iter().flatten() {
                tokenize(t).map_err(|e| CampaignError::Invalid(format!("app `{}`: {e}", app.name)))?;
            }
        }
        Ok(())
    }
}

impl CompilerFile {
    pub fn load(path: &Path) -> Result<CompilerFile, CampaignError> {
        let mut file: CompilerFile = read_toml(path)?;
        let base = parent_dir(path);
        for c in &mut file.compilers {
            if c.id.is_empty() || c.id.contains(['/', ':']) {
                return Err(CampaignError::Invalid(format!("compiler id `{}` must be non-empty without `/` or `:`", c.id)));
            }
            if let Some(p) = &c.prebuilt {
                c.prebuilt = Some(relative_to(&base, p));
            }
        }
        Ok(file)
    }
}

/// Split a template into argv tokens, refusing shell metacharacters.
pub fn tokenize(template: &str) -> Result<Vec<String>, String> {
    let tokens = shlex::split(template).ok_or_else(|| format!("unbalanced quoting in `{template}`"))?;
    if let Some(t) = tokens.iter().find(|t| t.contains(SHELL_META)) {
        return Err(format!("token `{t}` contains a shell metacharacter; templates run without a shell"));
    }
    if tokens.is_empty() {
        return Err("empty command template".into());
    }
    Ok(tokens)
}

fn expand_template(template: &str, vars: &HashMap<&str, String>, cflags: &[String]) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for tok in tokenize(template)? {
        if tok == "{CFLAGS}" {
            out.extend(cflags.iter().cloned());
            continue;
        }
        let mut s = tok.clone();
        for (k, v) in vars {
            s = s.replace(&format!("{{{k}}}"), v);
        }
        if let Some(start) = s.find('{') {
            if s[start..].contains('}') {
                return Err(format!("unknown placeholder in `{tok}`"));
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nonvec,
    Autovec,
    Intrinsics,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Nonvec => "nonvec",
            Mode::Autovec => "autovec",
            Mode::Intrinsics => "intrinsics",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "nonvec" => Ok(Mode::Nonvec),
            "autovec" => Ok(Mode::Autovec),
            "intrinsics" => Ok(Mode::Intrinsics),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

/// `<compiler>:<mode>`, selecting the per-app normalization record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineKey {
    pub compiler: String,
    pub mode: Mode,
}

impl FromStr for BaselineKey {
    type Err = CampaignError;
    fn from_str(s: &str) -> Result<BaselineKey, CampaignError> {
        let (c, m) = s.split_once(':').ok_or_else(|| CampaignError::BadBaseline(s.into()))?;
        let mode = m.parse().map_err(|_| CampaignError::BadBaseline(s.into()))?;
        if c.is_empty() {
            return Err(CampaignError::BadBaseline(s.into()));
        }
        Ok(BaselineKey {
            compiler: c.to_string(),
            mode,
        })
    }
}

impl fmt::Display for BaselineKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.compiler, self.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Job {
    pub app: String,
    pub compiler: String,
    pub mode: Mode,
    pub lmul: Option<u32>,
}

impl Job {
    /// `app/compiler/mode`, with `/lmulL` for explicit LMUL jobs.
    pub fn id(&self) -> String {
        let mut id = format!("{}/{}/{}", self.app, self.compiler, self.mode);
        if let Some(l) = self.lmul {
            id.push_str(&format!("/lmul{l}"));
        }
        id
    }

    pub fn is_baseline(&self, key: &BaselineKey) -> bool {
        self.lmul.is_none() && self.compiler == key.compiler && self.mode == key.mode
    }
}

/// Every app × compiler × (nonvec, autovec default, autovec at each LMUL),
/// plus an intrinsics job for apps that define one.
pub fn expand_matrix(
    apps: &[AppManifest],
    compilers: &[CompilerConfig],
    lmuls: &[u32],
) -> Result<Vec<Job>, CampaignError> {
    if apps.is_empty() {
        return Err(CampaignError::Empty("no apps"));
    }
    if compilers.is_empty() {
        return Err(CampaignError::Empty("no compilers"));
    }
    if let Some(&l) = lmuls.iter().find(|l| !LMUL_LEVELS.contains(l)) {
        return Err(CampaignError::BadLmul(l));
    }
    let mut jobs = Vec::new();
    let mut seen = BTreeSet::new();
    for app in apps {
        for c in compilers {
            let job = |mode, lmul| Job {
                app: app.name.clone(),
                compiler: c.id.clone(),
                mode,
                lmul,
            };
            let mut row = vec![job(Mode::Nonvec, None), job(Mode::Autovec, None)];
            row.extend(lmuls.iter().map(|&l| job(Mode::Autovec, Some(l))));
            if app.intrinsics_build.is_some() {
                row.push(job(Mode::Intrinsics, None));
            }
            for j in row {
                if !seen.insert(j.id()) {
                    return Err(CampaignError::DuplicateJob(j.id()));
                }
                jobs.push(j);
            }
        }
    }
    Ok(jobs)
}

/// Flag list for a job, in base, mode, LMUL, report order.
pub fn job_flags(job: &Job, compiler: &CompilerConfig) -> Vec<String> {
    let mut flags = compiler.base_flags.clone();
    match job.mode {
        Mode::Nonvec => flags.extend(compiler.nonvec_flags.iter().cloned()),
        Mode::Autovec => flags.extend(compiler.autovec_flags.iter().cloned()),
        Mode::Intrinsics => flags.extend(
            compiler
                .intrinsics_flags
                .as_ref()
                .unwrap_or(&compiler.autovec_flags)
                .iter()
                .cloned(),
        ),
    }
    if let Some(l) = job.lmul {
        flags.extend(compiler.lmul_flags.iter().map(|f| f.replace("{LMUL}", &l.to_string())));
    }
    if job.mode != Mode::Nonvec {
        flags.extend(compiler.vec_report_flags.iter().cloned());
    }
    flags
}

fn file_safe(id: &str) -> String {
    id.replace('/', "__")
}

/// A finished build.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltApp {
    pub binary: PathBuf,
    pub argv: Vec<String>,
    pub log: PathBuf,
    pub vec_report: Option<PathBuf>,
}

/// Build one job into `work_dir/bin`, writing the log to `work_dir/builds`.
pub fn build_app(
    job: &Job,
    app: &AppManifest,
    compiler: &CompilerConfig,
    work_dir: &Path,
) -> Result<BuiltApp, BuildError> {
    let id = job.id();
    let other = |message: String| BuildError::Other {
        job: id.clone(),
        message,
    };
    let bin_dir = work_dir.join("bin");
    let log_dir = work_dir.join("builds");
    for d in [&bin_dir, &log_dir] {
        std::fs::create_dir_all(d).map_err(|e| other(format!("{}: {e}", d.display())))?;
    }
    let out = bin_dir.join(file_safe(&id));
    let src_dir = app.src_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let template = match job.mode {
        Mode::Intrinsics => app
            .intrinsics_build
            .as_ref()
            .ok_or_else(|| other("app has no intrinsics build".into()))?,
        _ => &app.build,
    };
    let vars = HashMap::from([
        ("CC", compiler.cc.clone()),
        ("OUT", out.display().to_string()),
        ("SRC_DIR", src_dir.display().to_string()),
    ]);
    let argv = expand_template(template, &vars, &job_flags(job, compiler)).map_err(other)?;
    let log = log_dir.join(format!("{}.log", file_safe(&id)));
    let wants_report = !compiler.vec_report_flags.is_empty() && job.mode != Mode::Nonvec;

    let compiler_output = match compiler.backend {
        BackendKind::Fake => {
            match &compiler.prebuilt {
                Some(p) => {
                    std::fs::copy(p, &out).map_err(|e| other(format!("copying {}: {e}", p.display())))?;
                }
                None => {
                    std::fs::write(&out, format!("#!/bin/sh\n# {}\nexit 0\n", argv.join(" ")))
                        .map_err(|e| other(e.to_string()))?;
                    make_executable(&out).map_err(|e| other(e.to_string()))?;
                }
            }
            format!("fake build: {}\n", argv.join(" "))
        }
        BackendKind::Process => {
            let cc = find_executable(Path::new(&argv[0])).ok_or_else(|| BuildError::MissingCompiler(argv[0].clone()))?;
            let result = Command::new(cc)
                .args(&argv[1..])
                .current_dir(&src_dir)
                .output()
                .map_err(|e| other(e.to_string()))?;
            let mut text = format!("$ {}\n", argv.join(" "));
            text.push_str(&String::from_utf8_lossy(&result.stdout));
            text.push_str(&String::from_utf8_lossy(&result.stderr));
            if !result.status.success() {
                std::fs::write(&log, &text).map_err(|e| other(e.to_string()))?;
                return Err(BuildError::Compile {
                    job: id,
                    status: result.status.code().unwrap_or(-1),
                    log,
                });
            }
            text
        }
    };
    std::fs::write(&log, &compiler_output).map_err(|e| other(e.to_string()))?;
    let vec_report = if wants_report {
        let p = log_dir.join(format!("{}.vecreport", file_safe(&id)));
        std::fs::write(&p, &compiler_output).map_err(|e| other(e.to_string()))?;
        Some(p)
    } else {
        None
    };
    Ok(BuiltApp {
        binary: out,
        argv,
        log,
        vec_report,
    })
}

fn make_executable(p: &Path) -> std::io::Result<()> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(p, std::fs::Permissions::from_mode(0o755))
    }
    #[cfg(not(unix))]
    {
        let _ = p;
        Ok(())
    }
}

/// One measurement request handed to an [`AppRunner`].
#[derive(Debug, Clone)]
pub struct AppRunRequest<'a> {
    pub job: &'a Job,
    pub binary: &'a Path,
    pub argv: Vec<String>,
    pub env: Vec<(String, String)>,
    pub events: &'a [EventKind],
    pub runs: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppRunOutput {
    pub samples: Vec<RawSample>,
    pub stdout: String,
}

/// Measures applications. Implementations must not run two jobs at once.
pub trait AppRunner {
    fn platform_name(&self) -> Option<String>;
    fn run(&mut self, req: &AppRunRequest<'_>) -> Result<AppRunOutput, String>;
}

/// Live measurement under `perf stat` on a CPU list.
pub struct PerfAppRunner {
    pub runner: BenchmarkRunner,
    pub cpus: CpuSet,
}

impl AppRunner for PerfAppRunner {
    fn platform_name(&self) -> Option<String> {
        self.runner.platform.name.clone()
    }

    fn run(&mut self, req: &AppRunRequest<'_>) -> Result<AppRunOutput, String> {
        let inv = Invocation {
            kernel_name: req.job.id(),
            binary: req.binary.to_path_buf(),
            args: req.argv[1..].to_vec(),
            env: req.env.clone(),
            timing: Timing::WallClock,
        };
        let runs = self
            .runner
            .run_capture(&inv, req.events, req.runs, &self.cpus)
            .map_err(|e| e.to_string())?;
        let stdout = runs.last().map(|(_, s)| s.clone()).unwrap_or_default();
        Ok(AppRunOutput {
            samples: runs.into_iter().map(|(s, _)| s).collect(),
            stdout,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignPlatform {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub vlen: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayJob {
    pub id: String,
    #[serde(default)]
    pub stdout: String,
    /// Absolute scale chosen freely; only ratios between jobs carry meaning.
    #[serde(default)]
    pub illustrative: bool,
    pub runs: Vec<FixtureRun>,
}

/// Recorded application runs keyed by job id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignReplay {
    #[serde(default)]
    pub platform: CampaignPlatform,
    pub jobs: Vec<ReplayJob>,
}

impl CampaignReplay {
    pub fn load(path: &Path) -> Result<CampaignReplay, CampaignError> {
        let text = std::fs::read_to_string(path).map_err(|source| CampaignError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de).map_err(|e| CampaignError::Parse {
            path: path.to_path_buf(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })
    }
}

/// Serves recorded runs, restricted to the requested events.
pub struct ReplayAppRunner {
    replay: CampaignReplay,
}

impl ReplayAppRunner {
    pub fn new(replay: CampaignReplay) -> ReplayAppRunner {
        ReplayAppRunner { replay }
    }
}

impl AppRunner for ReplayAppRunner {
    fn platform_name(&self) -> Option<String> {
        self.replay.platform.name.clone()
    }

    fn run(&mut self, req: &AppRunRequest<'_>) -> Result<AppRunOutput, String> {
        let id = req.job.id();
        let job = self
            .replay
            .jobs
            .iter()
            .find(|j| j.id == id)
            .ok_or_else(|| format!("no recorded runs for `{id}`"))?;
        if job.runs.is_empty() {
            return Err(format!("`{id}` has no runs"));
        }
        let samples = job
            .runs
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut counts = PartialCounts::default();
                for &e in req.events {
                    counts[e] = r.counts[e];
                }
                let mut s = RawSample::new(&id, i as u32 + 1, r.elapsed_ns, counts);
                s.exit_status = r.exit_status;
                s.multiplexed = r.multiplexed.clone();
                s.not_counted = r.not_counted.clone();
                s
            })
            .collect();
        Ok(AppRunOutput {
            samples,
            stdout: job.stdout.clone(),
        })
    }
}

/// Everything a campaign run needs besides the job list.
pub struct CampaignContext<'a> {
    pub apps: &'a [AppManifest],
    pub compilers: &'a [CompilerConfig],
    pub calibration: &'a CalibrationReport,
    pub baseline: BaselineKey,
    pub runs: u32,
    pub work_dir: &'a Path,
}

struct Measured {
    job: Job,
    samples: Vec<RawSample>,
    error: Option<String>,
}

fn mean_counts(samples: &[RawSample], events: &[EventKind]) -> PartialCounts {
    let mut out = PartialCounts::default();
    for &e in events {
        let vals: Option<Vec<u64>> = samples.iter().map(|s| s.trusted(e)).collect();
        if let Some(vals) = vals.filter(|v| !v.is_empty()) {
            let sum: u128 = vals.iter().map(|&v| v as u128).sum();
            let n = vals.len() as u128;
            out[e] = Some(((sum + n / 2) / n) as u64);
        }
    }
    out
}

/// Build all jobs (concurrently), measure them one at a time, normalise
/// against the baseline and append the records to `store`.
pub fn run_campaign(
    jobs: &[Job],
    ctx: &CampaignContext<'_>,
    runner: &mut dyn AppRunner,
    store: &ResultsStore,
) -> Result<Vec<CampaignRecord>, CampaignError> {
    let apps: BTreeSet<&str> = jobs.iter().map(|j| j.app.as_str()).collect();
    for app in &apps {
        if !jobs.iter().any(|j| j.app == *app && j.is_baseline(&ctx.baseline)) {
            return Err(CampaignError::MissingBaseline {
                app: app.to_string(),
                key: ctx.baseline.to_string(),
            });
        }
    }
    let find_app = |name: &str| ctx.apps.iter().find(|a| a.name == name);
    let find_cc = |id: &str| ctx.compilers.iter().find(|c| c.id == id);
    for j in jobs {
        if find_app(&j.app).is_none() || find_cc(&j.compiler).is_none() {
            return Err(CampaignError::Invalid(format!("job `{}` refers to an unknown app or compiler", j.id())));
        }
    }

    let builds = build_all(jobs, ctx, &find_app, &find_cc);

    let events: Vec<EventKind> = EventKind::ALL
        .into_iter()
        .filter(|e| ctx.calibration.is_usable(*e))
        .collect();
    let mut measured = Vec::with_capacity(jobs.len());
    for (job, built) in jobs.iter().zip(builds) {
        let app = find_app(&job.app).expect("checked above");
        let outcome = built.map_err(|e| e.to_string()).and_then(|b| {
            let vars = HashMap::from([
                ("BIN", b.binary.display().to_string()),
                ("SRC_DIR", app.src_dir.clone().unwrap_or_default().display().to_string()),
            ]);
            let argv = expand_template(&app.run, &vars, &[])?;
            let req = AppRunRequest {
                job,
                binary: &b.binary,
                argv,
                env: app.env.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                events: &events,
                runs: ctx.runs,
            };
            let out = runner.run(&req)?;
            for s in &out.samples {
                app.validate.check(&out.stdout, s.exit_status)?;
                if !s.succeeded() {
                    return Err(format!("run {} did not succeed", s.run_index));
                }
            }
            Ok(out.samples)
        });
        measured.push(match outcome {
            Ok(samples) => Measured {
                job: job.clone(),
                samples,
                error: None,
            },
            Err(e) => Measured {
                job: job.clone(),
                samples: Vec::new(),
                error: Some(e),
            },
        });
    }

    let platform = runner.platform_name();
    let recorded_at = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let records = normalise(&measured, &events, &ctx.baseline, platform, recorded_at, find_app);
    store.append(&records)?;
    Ok(records)
}

fn build_all<'a>(
    jobs: &[Job],
    ctx: &CampaignContext<'a>,
    find_app: &(dyn Fn(&str) -> Option<&'a AppManifest> + Sync),
    find_cc: &(dyn Fn(&str) -> Option<&'a CompilerConfig> + Sync),
) -> Vec<Result<BuiltApp, BuildError>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|j| {
                            let app = find_app(&j.app).expect("checked");
                            let cc = find_cc(&j.compiler).expect("checked");
                            build_app(j, app, cc, ctx.work_dir)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("build worker panicked"))
            .collect()
    })
}

fn normalise<'a>(
    measured: &[Measured],
    events: &[EventKind],
    baseline: &BaselineKey,
    platform: Option<String>,
    recorded_at: u64,
    find_app: impl Fn(&str) -> Option<&'a AppManifest>,
) -> Vec<CampaignRecord> {
    let mut records: Vec<CampaignRecord> = measured
        .iter()
        .map(|m| {
            let runtimes: Vec<u64> = m.samples.iter().map(|s| s.elapsed_ns).collect();
            let mean = if runtimes.is_empty() {
                None
            } else {
                Some(runtimes.iter().map(|&v| v as f64).sum::<f64>() / runtimes.len() as f64)
            };
            CampaignRecord {
                schema_version: SCHEMA_VERSION,
                id: m.job.id(),
                app: m.job.app.clone(),
                compiler: m.job.compiler.clone(),
                mode: m.job.mode,
                lmul: m.job.lmul,
                platform: platform.clone(),
                tags: find_app(&m.job.app).map(|a| a.tags.clone()).unwrap_or_default(),
                runs: runtimes.len() as u32,
                runtime_ns: mean,
                runtime_min_ns: runtimes.iter().copied().min(),
                runtime_max_ns: runtimes.iter().copied().max(),
                counts: mean_counts(&m.samples, events),
                baseline: String::new(),
                speedup: None,
                reduction: None,
                valid: m.error.is_none(),
                error: m.error.clone(),
                recorded_at,
            }
        })
        .collect();

    let base: HashMap<String, (String, Option<f64>, Option<u64>, bool)> = measured
        .iter()
        .zip(&records)
        .filter(|(m, _)| m.job.is_baseline(baseline))
        .map(|(m, r)| (m.job.app.clone(), (r.id.clone(), r.runtime_ns, r.counts.retired, r.valid)))
        .collect();
    for r in &mut records {
        let Some((bid, brt, bret, bvalid)) = base.get(&r.app) else { continue };
        r.baseline = bid.clone();
        if !r.valid {
            continue;
        }
        if !bvalid {
            r.error = Some(format!("baseline `{bid}` is invalid; not normalised"));
            continue;
        }
        if r.id == *bid {
            r.speedup = Some(1.0);
            r.reduction = r.counts.retired.map(|_| 1.0);
            continue;
        }
        r.speedup = match (brt, r.runtime_ns) {
            (Some(b), Some(v)) => analytics::speedup(*b, v).ok(),
            _ => None,
        };
        r.reduction = match (bret, r.counts.retired) {
            (Some(b), Some(v)) => analytics::instruction_reduction(*b as f64, v as f64).ok(),
            _ => None,
        };
    }
    records
}
