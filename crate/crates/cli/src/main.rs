use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rvvprobe_core::kernelgen::GenError;
use rvvprobe_core::sim::{run_kernel_text, SimError};
use rvvprobe_core::{
    calibrate_suite, generate_kernel, generate_suite, parse_kernel, predict_counts, CalibrationParams,
    CalibrationReport, EventCounts, EventKind, Lmul, MachineState, SuiteKind, SuiteOptions, VectorConfig,
};
use rvvprobe_harness::campaign::{
    expand_matrix, run_campaign, AppRunner, BaselineKey, BuildError, CampaignContext, CampaignError,
    CampaignReplay, CompilerFile, ManifestFile, PerfAppRunner, ReplayAppRunner, DEFAULT_BASELINE, DEFAULT_RUNS,
    LMUL_LEVELS,
};
use rvvprobe_harness::platform::{probe_platform, PlatformConfig, PlatformError};
use rvvprobe_harness::replay::{FixturePlatform, ReplayError, ReplayFixture, SAMPLES_FILE};
use rvvprobe_harness::report::{render, OutputFormat, ReportError, ReportKind, ReportRequest};
use rvvprobe_harness::runner::{BenchmarkRunner, CpuSet, Invocation, RunError, Timing};
use rvvprobe_harness::store::ResultsStore;

/// Largest iteration count the simulator accepts.
const SIM_MAX_ITERATIONS: u64 = 1_000_000;
/// Buffer used when simulating a kernel without a metadata record.
const SIM_DEFAULT_BUFFER: usize = 16 * 1024;

#[derive(Parser)]
#[command(name = "rvvprobe", version, about = "RVV 1.0 microbenchmark generation, measurement and analysis")]
struct Cli {
    /// Vector register length in bits.
    #[arg(long, global = true)]
    vlen: Option<u32>,
    /// Platform description file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Table,
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> OutputFormat {
        match f {
            Format::Table => OutputFormat::Table,
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DataFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BufferInit {
    Zero,
    /// Byte `i` holds `i mod 256`.
    Index,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a kernel suite as assembly files with metadata sidecars.
    Gen {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        iterations: Option<u64>,
        /// LMUL values, comma separated (e.g. `1,2` or `m1,mf2`).
        #[arg(long, value_delimiter = ',')]
        lmul: Vec<String>,
        #[arg(long)]
        unroll: Option<u32>,
        #[arg(long)]
        stride: Option<u32>,
    },
    /// Predict event counts from kernel text.
    Predict {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        iterations: Option<u64>,
    },
    /// Execute a kernel on the functional simulator.
    Sim {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        iterations: u64,
        #[arg(long)]
        dump_state: bool,
        /// Fail with exit status 3 when simulated counts differ from the prediction.
        #[arg(long)]
        check: bool,
        #[arg(long, value_enum, default_value = "index")]
        buffer_init: BufferInit,
    },
    /// Measure benchmark binaries, or replay recorded samples.
    Run(RunArgs),
    /// Classify hardware events against calibration references.
    Calibrate {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = CalibrationParams::default().tolerance)]
        tolerance: f64,
        #[arg(long, default_value_t = CalibrationParams::default().floor)]
        floor: f64,
        #[arg(long, default_value_t = CalibrationParams::default().min_runs)]
        min_runs: usize,
        #[arg(long, value_enum)]
        report: Option<Format>,
    },
    /// Emit tidy plot data for one analysis.
    Analyze {
        #[arg(value_enum)]
        what: Analysis,
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        out: DataFormat,
        /// Write to a file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compiler auto-vectorisation campaigns.
    Campaign {
        #[command(subcommand)]
        command: CampaignCommand,
    },
    /// Render one report.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "replay", required_unless_present = "replay")]
    kernel_dir: Option<PathBuf>,
    /// Print the samples held in a replay fixture.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Events to count, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "retired")]
    events: Vec<String>,
    #[arg(long, default_value_t = 5)]
    runs: u32,
    #[arg(long, default_value_t = 0)]
    pin: u32,
    /// Where `samples.json` is written; defaults to the kernel directory.
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Analysis {
    Throughput,
    Overhead,
    Mix,
    Sweep,
}

impl Analysis {
    fn report(self) -> ReportKind {
        match self {
            Analysis::Throughput => ReportKind::ThroughputTable,
            Analysis::Overhead => ReportKind::TailOverheadCurve,
            Analysis::Mix => ReportKind::MixStacks,
            Analysis::Sweep => ReportKind::LmulSweep,
        }
    }
}

#[derive(Subcommand)]
enum CampaignCommand {
    /// Build every job, measure it and append records to the results store.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        compilers: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = LMUL_LEVELS)]
        lmul: Vec<u32>,
        #[arg(long, default_value = DEFAULT_BASELINE)]
        baseline: String,
        #[arg(long)]
        results: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RUNS)]
        runs: u32,
        /// Calibration samples; only events usable under them are stored.
        #[arg(long, required_unless_present = "assume_calibrated")]
        calibration: Option<PathBuf>,
        /// Trust every event without calibration data.
        #[arg(long)]
        assume_calibrated: bool,
        /// Take measurements from a campaign replay fixture.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// CPU list for measurement runs.
        #[arg(long, default_value = "0")]
        cpus: String,
        /// Build directory; defaults to `<results>/work`.
        #[arg(long)]
        work_dir: Option<PathBuf>,
    },
    /// Summarise a results store.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Re-normalise against another `<compiler>:<mode>` baseline.
        #[arg(long)]
        relative_to: Option<String>,
    },
}

#[derive(Args)]
struct ReportArgs {
    kind: String,
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    relative_to: Option<String>,
    #[arg(long)]
    allow_mixed_platforms: bool,
    #[arg(long, default_value_t = CalibrationParams::default().tolerance)]
    tolerance: f64,
    #[arg(long, default_value_t = CalibrationParams::default().floor)]
    floor: f64,
}

/// An error together with the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn user(m: impl ToString) -> Failure {
        Failure { code: 1, message: m.to_string() }
    }
    fn env(m: impl ToString) -> Failure {
        Failure { code: 2, message: m.to_string() }
    }
    fn internal(m: impl ToString) -> Failure {
        Failure { code: 3, message: m.to_string() }
    }
}

impl From<PlatformError> for Failure {
    fn from(e: PlatformError) -> Failure {
        match e {
            PlatformError::Io { .. } | PlatformError::NoVectorUnit | PlatformError::VlenMismatch { .. } => Failure::env(e),
            _ => Failure::user(e),
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Failure {
        match e {
            RunError::Platform(p) => p.into(),
            RunError::MissingTool(_)
            | RunError::Launch { .. }
            | RunError::NonZeroExit { .. }
            | RunError::Parse { .. }
            | RunError::IterationMismatch { .. } => Failure::env(e),
            _ => Failure::user(e),
        }
    }
}

impl From<ReplayError> for Failure {
    fn from(e: ReplayError) -> Failure {
        match e {
            ReplayError::Io { .. } => Failure::env(e),
            _ => Failure::user(e),
        }
    }
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Failure {
        match e {
            CampaignError::Io { .. } | CampaignError::Store(_) => Failure::env(e),
            CampaignError::Build(BuildError::MissingCompiler(_) | BuildError::Compile { .. }) => Failure::env(e),
            _ => Failure::user(e),
        }
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Failure {
        match e {
            ReportError::Replay(r) => r.into(),
            ReportError::Campaign(c) => c.into(),
            ReportError::Store(_) => Failure::env(e),
            _ => Failure::user(e),
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String> {
    let platform = cli.config.as_deref().map(PlatformConfig::load).transpose()?;
    let ctx = Globals {
        vlen: cli.vlen,
        platform,
        format: cli.format,
    };
    match &cli.command {
        Command::Gen {
            suite,
            out,
            iterations,
            lmul,
            unroll,
            stride,
        } => cmd_gen(&ctx, suite, out, *iterations, lmul, *unroll, *stride),
        Command::Predict { kernel, iterations } => cmd_predict(&ctx, kernel, *iterations),
        Command::Sim {
            kernel,
            iterations,
            dump_state,
            check,
            buffer_init,
        } => cmd_sim(&ctx, kernel, *iterations, *dump_state, *check, *buffer_init),
        Command::Run(args) => cmd_run(&ctx, args),
        Command::Calibrate {
            results,
            tolerance,
            floor,
            min_runs,
            report,
        } => {
            let params = CalibrationParams {
                tolerance: *tolerance,
                floor: *floor,
                min_runs: *min_runs,
            };
            cmd_calibrate(report.or(ctx.format).unwrap_or(Format::Table), results, params)
        }
        Command::Analyze {
            what,
            inputs,
            out,
            output,
        } => {
            let mut req = ReportRequest::new(what.report(), inputs.clone());
            req.format = match out {
                DataFormat::Csv => OutputFormat::Csv,
                DataFormat::Json => OutputFormat::Json,
            };
            let text = render(&req)?.format(req.format);
            match output {
                Some(p) => {
                    std::fs::write(p, text).map_err(|e| Failure::env(format!("{}: {e}", p.display())))?;
                    Ok(String::new())
                }
                None => Ok(text),
            }
        }
        Command::Campaign { command } => cmd_campaign(&ctx, command),
        Command::Report(args) => cmd_report(&ctx, args),
    }
}

struct Globals {
    vlen: Option<u32>,
    platform: Option<PlatformConfig>,
    format: Option<Format>,
}

impl Globals {
    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Table)
    }

    fn vlen(&self) -> Option<u32> {
        self.vlen.or_else(|| self.platform.as_ref().and_then(|p| p.vlen_bits))
    }

    fn vector_config(&self, fallback: Option<u32>) -> Result<VectorConfig> {
        let bits = self
            .vlen()
            .or(fallback)
            .ok_or_else(|| Failure::user("no vector length: pass --vlen or a --config with vlen_bits"))?;
        let cfg = VectorConfig::new(bits).map_err(Failure::user)?;
        Ok(match self.platform.as_ref().and_then(|p| p.clock_hz) {
            Some(hz) => cfg.with_clock_hz(hz),
            None => cfg,
        })
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        let m = format!("{}: {e}", path.display());
        if e.kind() == std::io::ErrorKind::NotFound {
            Failure::user(m)
        } else {
            Failure::env(m)
        }
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Failure::env(format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize + ?Sized>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(Failure::internal)
}

fn cmd_gen(
    g: &Globals,
    suite: &str,
    out: &Path,
    iterations: Option<u64>,
    lmul: &[String],
    unroll: Option<u32>,
    stride: Option<u32>,
) -> Result<String> {
    let kind: SuiteKind = suite.parse().map_err(|e: String| {
        let names: Vec<String> = SuiteKind::ALL.iter().map(|k| serde_json::to_string(k).unwrap_or_default()).collect();
        Failure::user(format!("{e}; expected one of {}", names.join(", ")))
    })?;
    let cfg = g.vector_config(None)?;
    let mut opts = SuiteOptions::default();
    if !lmul.is_empty() {
        opts.lmuls = lmul
            .iter()
            .map(|s| s.parse::<Lmul>().map_err(Failure::user))
            .collect::<Result<_>>()?;
    }
    if let Some(n) = iterations {
        if n == 0 {
            return Err(Failure::user("--iterations must be at least 1"));
        }
        opts.iterations = n;
    }
    if let Some(u) = unroll {
        opts.unroll = u;
    }
    if let Some(s) = stride {
        opts.stride = s;
    }
    std::fs::create_dir_all(out).map_err(|e| Failure::env(format!("{}: {e}", out.display())))?;
    let mut listing = String::new();
    let mut skipped = 0usize;
    for spec in generate_suite(kind, &cfg, &opts) {
        let module = match generate_kernel(&spec, &cfg) {
            Ok(m) => m,
            // Combinations that the machine cannot express are left out of the suite.
            Err(GenError::Vtype(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(Failure::user(format!("{}: {e}", spec.name))),
        };
        let stem = spec.file_stem();
        write(&out.join(format!("{stem}.s")), &module.text)?;
        write(&out.join(format!("{stem}.json")), &(module.sidecar_json() + "\n"))?;
        let _ = writeln!(listing, "{stem}.s");
    }
    if skipped > 0 {
        eprintln!("skipped {skipped} kernels that VLEN {} cannot express", cfg.vlen_bits());
    }
    Ok(listing)
}

fn counts_document(counts: &EventCounts, extra: &[(&str, u64)], format: Format) -> Result<String> {
    let rows: Vec<(String, u64)> = extra
        .iter()
        .map(|(k, v)| (k.to_string(), *v))
        .chain(counts.iter().map(|(e, v)| (e.name().to_string(), v)))
        .collect();
    Ok(match format {
        Format::Table => {
            let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            let mut s = String::new();
            for (k, v) in &rows {
                let _ = writeln!(s, "{k:<w$}  {v}");
            }
            s
        }
        Format::Csv => {
            let mut s = String::from("metric,value\n");
            for (k, v) in &rows {
                let _ = writeln!(s, "{k},{v}");
            }
            s
        }
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> =
                rows.into_iter().map(|(k, v)| (k, serde_json::Value::from(v))).collect();
            to_json(&map)?
        }
    })
}

fn cmd_predict(g: &Globals, kernel: &Path, iterations: Option<u64>) -> Result<String> {
    let text = read(kernel)?;
    let parsed = parse_kernel(&text).map_err(|e| Failure::user(format!("{}: {e}", kernel.display())))?;
    let iterations = iterations
        .or_else(|| parsed.metadata.as_ref().map(|m| m.spec.iterations))
        .ok_or_else(|| Failure::user("kernel has no metadata; pass --iterations"))?;
    let r = predict_counts(&parsed, iterations).map_err(Failure::user)?;
    counts_document(
        &r.counts,
        &[("iterations", r.iterations), ("target-inst-count", r.target_inst_count)],
        g.format(),
    )
}

fn cmd_sim(g: &Globals, kernel: &Path, iterations: u64, dump: bool, check: bool, init: BufferInit) -> Result<String> {
    if iterations == 0 || iterations > SIM_MAX_ITERATIONS {
        return Err(Failure::user(format!("--iterations must be within 1..={SIM_MAX_ITERATIONS}")));
    }
    let text = read(kernel)?;
    let parsed = parse_kernel(&text).map_err(|e| Failure::user(format!("{}: {e}", kernel.display())))?;
    let meta = parsed.metadata.as_ref();
    let cfg = g.vector_config(meta.map(|m| m.vlen_bits))?;
    let buffer = meta.map_or(SIM_DEFAULT_BUFFER, |m| m.buffer_bytes);
    let run = run_kernel_text(&text, &cfg, buffer, iterations, Some(&parsed.target_inst), |b| {
        if let BufferInit::Index = init {
            for (i, x) in b.iter_mut().enumerate() {
                *x = i as u8;
            }
        }
    })
    .map_err(|e| match e {
        SimError::StepLimit { .. } => Failure::user(e),
        _ => Failure::user(format!("{}: {e}", kernel.display())),
    })?;
    let stats = run.stats;
    let mut out = counts_document(
        &stats.counts,
        &[("iterations", iterations), ("target-inst-count", stats.target_inst_count)],
        g.format(),
    )?;
    if dump {
        out.push_str(&dump_state(&run.state));
    }
    if check {
        let predicted = predict_counts(&parsed, iterations).map_err(Failure::user)?;
        let mut diffs = Vec::new();
        for (e, p) in predicted.counts.iter() {
            if stats.counts[e] != p {
                diffs.push(format!("{e}: predicted {p}, simulated {}", stats.counts[e]));
            }
        }
        if predicted.target_inst_count != stats.target_inst_count {
            diffs.push(format!(
                "target-inst-count: predicted {}, simulated {}",
                predicted.target_inst_count, stats.target_inst_count
            ));
        }
        if !diffs.is_empty() {
            print!("{out}");
            return Err(Failure::internal(format!("prediction and simulation disagree: {}", diffs.join("; "))));
        }
    }
    Ok(out)
}

fn dump_state(s: &MachineState) -> String {
    let mut out = String::from("[state]\n");
    match s.vtype {
        Some(v) => {
            let _ = writeln!(
                out,
                "vtype = {{ sew = {}, lmul = {}, vta = {:?}, vma = {:?} }}",
                v.sew, v.lmul, v.vta, v.vma
            );
            let _ = writeln!(out, "vl = {}", v.vl);
        }
        None => out.push_str("vtype = vill\nvl = 0\n"),
    }
    for (i, x) in s.x.iter().enumerate() {
        if *x != 0 {
            let _ = writeln!(out, "x{i} = {x:#018x}");
        }
    }
    for (i, f) in s.f.iter().enumerate() {
        if *f != 0 {
            let _ = writeln!(out, "f{i} = {f:#018x}");
        }
    }
    for r in 0..32u8 {
        let bytes = s.vreg(r);
        if bytes.iter().any(|&b| b != 0) {
            let hex: String = bytes.iter().rev().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(out, "v{r} = 0x{hex}");
        }
    }
    out
}

fn parse_events(list: &[String]) -> Result<Vec<EventKind>> {
    let mut out = Vec::new();
    for s in list {
        let e: EventKind = s.parse().map_err(Failure::user)?;
        if !out.contains(&e) {
            out.push(e);
        }
    }
    Ok(out)
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

fn cmd_run(g: &Globals, args: &RunArgs) -> Result<String> {
    if let Some(path) = &args.replay {
        let fixture = ReplayFixture::load(path)?;
        let samples = fixture.samples();
        let mut out = String::new();
        match g.format() {
            Format::Json => out = to_json(&samples)?,
            f => {
                let csv = matches!(f, Format::Csv);
                let sep = if csv { "," } else { "  " };
                let mut header = vec!["kernel".to_string(), "run".into(), "elapsed_ns".into()];
                header.extend(EventKind::ALL.iter().map(|e| e.field().to_string()));
                let _ = writeln!(out, "{}", header.join(sep));
                for s in &samples {
                    let mut row = vec![s.kernel_name.clone(), s.run_index.to_string(), s.elapsed_ns.to_string()];
                    row.extend(EventKind::ALL.iter().map(|&e| s.counts[e].map_or("-".into(), |v| v.to_string())));
                    let _ = writeln!(out, "{}", row.join(sep));
                }
            }
        }
        return Ok(out);
    }
    let dir = args.kernel_dir.as_deref().expect("clap requires --kernel-dir without --replay");
    let events = parse_events(&args.events)?;
    let config = g.platform.clone().unwrap_or_default();
    let config = PlatformConfig {
        vlen_bits: g.vlen.or(config.vlen_bits),
        ..config
    };
    let mut kernels = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::user(format!("{}: {e}", dir.display())))?;
    let mut sidecars: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != SAMPLES_FILE))
        .collect();
    sidecars.sort();
    for side in sidecars {
        let meta: rvvprobe_core::KernelMetadata = match serde_json::from_str(&read(&side)?) {
            Ok(m) => m,
            Err(_) => continue,
        };
        kernels.push((meta, side.with_extension("")));
    }
    if kernels.is_empty() {
        return Err(Failure::user(format!("no kernel metadata found in {}", dir.display())));
    }
    let platform = probe_platform(&config)?;
    if let Some((_, b)) = kernels.iter().find(|(_, b)| !is_executable(b)) {
        return Err(Failure::user(format!(
            "{} is missing or not executable; link the kernel with the driver first",
            b.display()
        )));
    }
    if let Some((m, _)) = kernels.iter().find(|(m, _)| m.vlen_bits != platform.vlen_bits) {
        return Err(Failure::user(format!(
            "kernel {} was generated for VLEN {} but the host has VLEN {}",
            m.spec.name, m.vlen_bits, platform.vlen_bits
        )));
    }
    let mut runner = BenchmarkRunner::new(platform.clone());
    if let Some(p) = &config.perf {
        runner.perf = p.into();
    }
    if let Some(t) = &config.taskset {
        runner.taskset = t.into();
    }
    let mut samples = Vec::new();
    for (meta, binary) in &kernels {
        let inv = Invocation {
            kernel_name: meta.spec.name.clone(),
            binary: binary.clone(),
            args: vec![meta.spec.iterations.to_string()],
            env: vec![],
            timing: Timing::Driver {
                expected_iterations: Some(meta.spec.iterations),
            },
        };
        samples.extend(runner.run_benchmark(&inv, &events, args.runs, args.pin)?);
    }
    let specs: Vec<_> = kernels.iter().map(|(m, _)| m.spec.clone()).collect();
    let fixture = ReplayFixture::from_samples(
        FixturePlatform {
            vlen: platform.vlen_bits,
            clock_hz: platform.clock_hz,
        },
        &specs,
        &samples,
    );
    let results = args.results.clone().unwrap_or_else(|| dir.to_path_buf());
    std::fs::create_dir_all(&results).map_err(|e| Failure::env(format!("{}: {e}", results.display())))?;
    let path = results.join(SAMPLES_FILE);
    write(&path, &(fixture.to_json() + "\n"))?;
    Ok(format!("wrote {} samples to {}\n", samples.len(), path.display()))
}

fn load_calibration(path: &Path, params: &CalibrationParams) -> Result<CalibrationReport> {
    let fixture = ReplayFixture::load(path)?;
    let refs = fixture.references()?;
    if refs.is_empty() {
        return Err(Failure::user(format!("{}: no kernel carries a spec echo", path.display())));
    }
    Ok(calibrate_suite(&fixture.samples(), &refs, params))
}

fn cmd_calibrate(format: Format, results: &Path, params: CalibrationParams) -> Result<String> {
    if let Format::Json = format {
        return to_json(&load_calibration(results, &params)?);
    }
    let mut req = ReportRequest::new(ReportKind::CalibrationTable, vec![results.to_path_buf()]);
    req.calibration = params;
    req.format = format.into();
    Ok(render(&req)?.format(req.format))
}

fn cmd_campaign(g: &Globals, cmd: &CampaignCommand) -> Result<String> {
    match cmd {
        CampaignCommand::Run {
            manifest,
            compilers,
            lmul,
            baseline,
            results,
            runs,
            calibration,
            assume_calibrated,
            replay,
            cpus,
            work_dir,
        } => {
            let apps = ManifestFile::load(manifest)?.apps;
            let compilers = CompilerFile::load(compilers)?.compilers;
            let baseline: BaselineKey = baseline.parse()?;
            let jobs = expand_matrix(&apps, &compilers, lmul)?;
            let cal = match (calibration, assume_calibrated) {
                (Some(p), _) => load_calibration(p, &CalibrationParams::default())?,
                (None, _) => {
                    eprintln!("warning: no calibration data; every event is trusted");
                    CalibrationReport::assume_all_usable()
                }
            };
            let work = work_dir.clone().unwrap_or_else(|| results.join("work"));
            let mut runner: Box<dyn AppRunner> = match replay {
                Some(p) => Box::new(ReplayAppRunner::new(CampaignReplay::load(p)?)),
                None => {
                    let config = g.platform.clone().unwrap_or_default();
                    let config = PlatformConfig {
                        vlen_bits: g.vlen.or(config.vlen_bits),
                        ..config
                    };
                    let platform = probe_platform(&config)?;
                    let mut runner = BenchmarkRunner::new(platform);
                    if let Some(p) = &config.perf {
                        runner.perf = p.into();
                    }
                    if let Some(t) = &config.taskset {
                        runner.taskset = t.into();
                    }
                    let cpus: CpuSet = cpus.parse().map_err(Failure::user)?;
                    Box::new(PerfAppRunner { runner, cpus })
                }
            };
            let ctx = CampaignContext {
                apps: &apps,
                compilers: &compilers,
                calibration: &cal,
                baseline,
                runs: *runs,
                work_dir: &work,
            };
            let store = ResultsStore::new(results);
            let records = run_campaign(&jobs, &ctx, runner.as_mut(), &store)?;
            let invalid = records.iter().filter(|r| !r.valid).count();
            let mut out = format!(
                "{} records appended to {} ({invalid} invalid)\n",
                records.len(),
                store.records_path().display()
            );
            for r in records.iter().filter(|r| !r.valid) {
                let _ = writeln!(out, "invalid: {}: {}", r.id, r.error.as_deref().unwrap_or("unknown"));
            }
            Ok(out)
        }
        CampaignCommand::Report { results, relative_to } => {
            let mut out = String::new();
            for kind in [ReportKind::SpeedupBars, ReportKind::ReductionBars, ReportKind::LmulSweep] {
                let mut req = ReportRequest::new(kind, vec![results.clone()]);
                req.relative_to = relative_to.clone();
                req.format = g.format().into();
                out.push_str(&render(&req)?.format(req.format));
                if let Format::Table = g.format() {
                    out.push('\n');
                }
            }
            Ok(out)
        }
    }
}

fn cmd_report(g: &Globals, args: &ReportArgs) -> Result<String> {
    let kind: ReportKind = args.kind.parse().map_err(|e: ReportError| {
        let names: Vec<&str> = ReportKind::ALL.iter().map(|k| k.name()).collect();
        Failure::user(format!("{e}; expected one of {}", names.join(", ")))
    })?;
    let mut req = ReportRequest::new(kind, args.inputs.clone());
    req.relative_to = args.relative_to.clone();
    req.allow_mixed_platforms = args.allow_mixed_platforms;
    req.calibration.tolerance = args.tolerance;
    req.calibration.floor = args.floor;
    req.format = g.format().into();
    Ok(render(&req)?.format(req.format))
}
