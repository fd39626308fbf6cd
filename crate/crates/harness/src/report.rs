//! Rendering of tables and tidy CSV from fixtures, results directories and
//! campaign stores.
//!
//! Tidy CSV always has the columns `record_id,subject,variant,metric,value`.
//! `record_id` names the fixture kernel or campaign record each number comes
//! from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rvvprobe_core::analytics::{self, lmul_sweep_summary, Measurement, SweepPoint};
use rvvprobe_core::{calibrate_suite, CalibrationParams, EventCounts, EventKind, KernelSpec, Pattern, Sew};
use serde::Serialize;
use thiserror::Error;

use crate::campaign::{BaselineKey, Mode};
use crate::replay::{ReplayError, ReplayFixture};
use crate::store::{latest_by_id, CampaignRecord, ResultsStore, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    CalibrationTable,
    ThroughputTable,
    StrideCompare,
    TailOverheadCurve,
    SpeedupBars,
    ReductionBars,
    MixStacks,
    LmulSweep,
}

impl ReportKind {
    pub const ALL: [ReportKind; 8] = [
        ReportKind::CalibrationTable,
        ReportKind::ThroughputTable,
        ReportKind::StrideCompare,
        ReportKind::TailOverheadCurve,
        ReportKind::SpeedupBars,
        ReportKind::ReductionBars,
        ReportKind::MixStacks,
        ReportKind::LmulSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReportKind::CalibrationTable => "calibration-table",
            ReportKind::ThroughputTable => "throughput-table",
            ReportKind::StrideCompare => "stride-compare",
            ReportKind::TailOverheadCurve => "tail-overhead-curve",
            ReportKind::SpeedupBars => "speedup-bars",
            ReportKind::ReductionBars => "reduction-bars",
            ReportKind::MixStacks => "mix-stacks",
            ReportKind::LmulSweep => "lmul-sweep",
        }
    }

    /// Kinds fed by campaign records rather than kernel samples.
    pub fn uses_records(self) -> bool {
        matches!(
            self,
            ReportKind::SpeedupBars | ReportKind::ReductionBars | ReportKind::MixStacks | ReportKind::LmulSweep
        )
    }
}

impl FromStr for ReportKind {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<ReportKind, ReportError> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ReportError::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<OutputFormat, ReportError> {
        match s {
            "table" => Ok(OutputFormat::Table),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report kind `{0}`")]
    UnknownKind(String),
    #[error("unknown output format `{0}`")]
    UnknownFormat(String),
    #[error("report needs at least one input")]
    NoInput,
    #[error("input {0} does not exist")]
    MissingInput(PathBuf),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("inputs come from different platforms ({0}); pass the mixed-platform override to combine them")]
    MixedPlatforms(String),
    #[error(transparent)]
    Campaign(#[from] crate::campaign::CampaignError),
}

#[derive(Debug, Clone)]
pub struct ReportRequest {
    pub kind: ReportKind,
    pub inputs: Vec<PathBuf>,
    pub format: OutputFormat,
    pub calibration: CalibrationParams,
    /// Re-normalise speedups and reductions against this `<compiler>:<mode>` per app.
    pub relative_to: Option<String>,
    pub allow_mixed_platforms: bool,
}

impl ReportRequest {
    pub fn new(kind: ReportKind, inputs: Vec<PathBuf>) -> ReportRequest {
        ReportRequest {
            kind,
            inputs,
            format: OutputFormat::Table,
            calibration: CalibrationParams::default(),
            relative_to: None,
            allow_mixed_platforms: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TidyRow {
    pub record_id: String,
    pub subject: String,
    pub variant: String,
    pub metric: String,
    pub value: f64,
}

/// A rendered report before formatting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Document {
    pub kind: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub tidy: Vec<TidyRow>,
    pub notes: Vec<String>,
}

impl Document {
    fn new(kind: ReportKind, title: &str, columns: &[&str]) -> Document {
        Document {
            kind: kind.name().to_string(),
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            tidy: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn tidy(&mut self, record_id: &str, subject: &str, variant: &str, metric: &str, value: f64) {
        self.tidy.push(TidyRow {
            record_id: record_id.to_string(),
            subject: subject.to_string(),
            variant: variant.to_string(),
            metric: metric.to_string(),
            value,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Value of one tidy row, for callers that want numbers rather than text.
    pub fn value(&self, record_id: &str, metric: &str) -> Option<f64> {
        self.tidy
            .iter()
            .find(|r| r.record_id == record_id && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn format(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Table => self.as_table(),
            OutputFormat::Csv => self.as_csv(),
            OutputFormat::Json => serde_json::to_string_pretty(self).expect("document serializes") + "\n",
        }
    }

    fn as_table(&self) -> String {
        let mut out = format!("{}\n", self.title);
        if self.rows.is_empty() {
            out.push_str("no records\n");
        } else {
            let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
            for r in &self.rows {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cells: &[String]| {
                let mut s = String::new();
                for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                    if i == 0 {
                        let _ = write!(s, "{c:<w$}");
                    } else {
                        let _ = write!(s, "  {c:>w$}");
                    }
                }
                s.trim_end().to_string() + "\n"
            };
            out.push_str(&line(&self.columns));
            let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
            out.push_str(&line(&rule));
            for r in &self.rows {
                out.push_str(&line(r));
            }
        }
        for n in &self.notes {
            out.push_str(n);
            out.push('\n');
        }
        out
    }

    fn as_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.tidy {
            w.serialize(r).expect("in-memory csv write");
        }
        if self.tidy.is_empty() {
            w.write_record(["record_id", "subject", "variant", "metric", "value"])
                .expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

/// Count formatted the way counter tables usually are: exact below a
/// million, three significant digits above.
pub fn format_count(v: f64) -> String {
    if v.abs() < 1e6 {
        format!("{}", v.round() as i64)
    } else {
        let exp = v.abs().log10().floor() as i32;
        let mantissa = v / 10f64.powi(exp);
        if (mantissa * 100.0).round() >= 1000.0 {
            format!("{:.2}e{}", mantissa / 10.0, exp + 1)
        } else {
            format!("{mantissa:.2}e{exp}")
        }
    }
}

fn fmt_ratio(v: Option<f64>) -> String {
    v.map_or_else(|| "missing".to_string(), |x| format!("{x:.2}x"))
}

fn fmt_gops(v: f64) -> String {
    format!("{v:.2}")
}

/// Render `req` into a document.
pub fn render(req: &ReportRequest) -> Result<Document, ReportError> {
    if req.inputs.is_empty() {
        return Err(ReportError::NoInput);
    }
    for p in &req.inputs {
        if !p.exists() {
            return Err(ReportError::MissingInput(p.clone()));
        }
    }
    if req.kind.uses_records() {
        let records = load_records(&req.inputs, req.allow_mixed_platforms)?;
        let records = match &req.relative_to {
            Some(key) => renormalise(records, &key.parse()?),
            None => records,
        };
        Ok(match req.kind {
            ReportKind::SpeedupBars => bars(req.kind, &records, |r| r.speedup, "speedup"),
            ReportKind::ReductionBars => bars(req.kind, &records, |r| r.reduction, "reduction"),
            ReportKind::MixStacks => mix_stacks(&records),
            _ => lmul_sweep(&records),
        })
    } else {
        let fixtures = load_fixtures(&req.inputs, req.allow_mixed_platforms)?;
        Ok(match req.kind {
            ReportKind::CalibrationTable => calibration_table(&fixtures, &req.calibration)?,
            ReportKind::ThroughputTable => throughput_table(&fixtures),
            ReportKind::StrideCompare => stride_compare(&fixtures),
            _ => tail_overhead(&fixtures),
        })
    }
}

/// Render and format in one step.
pub fn render_to_string(req: &ReportRequest) -> Result<String, ReportError> {
    Ok(render(req)?.format(req.format))
}

fn load_records(inputs: &[PathBuf], allow_mixed: bool) -> Result<Vec<CampaignRecord>, ReportError> {
    let mut all = Vec::new();
    for p in inputs {
        let records = if p.is_dir() {
            ResultsStore::new(p).load()?
        } else {
            let text = std::fs::read_to_string(p).map_err(|source| StoreError::Io { path: p.clone(), source })?;
            crate::store::parse_records(&text, p)?
        };
        all.extend(records);
    }
    let platforms: std::collections::BTreeSet<String> =
        all.iter().map(|r| r.platform.clone().unwrap_or_else(|| "unknown".into())).collect();
    if platforms.len() > 1 && !allow_mixed {
        return Err(ReportError::MixedPlatforms(platforms.into_iter().collect::<Vec<_>>().join(", ")));
    }
    Ok(latest_by_id(all))
}

fn load_fixtures(inputs: &[PathBuf], allow_mixed: bool) -> Result<Vec<ReplayFixture>, ReportError> {
    let fixtures: Vec<ReplayFixture> = inputs
        .iter()
        .map(|p| ReplayFixture::load(p))
        .collect::<Result<_, _>>()?;
    let vlens: std::collections::BTreeSet<u32> = fixtures.iter().map(|f| f.platform.vlen).collect();
    if vlens.len() > 1 && !allow_mixed {
        let list: Vec<String> = vlens.iter().map(|v| format!("vlen {v}")).collect();
        return Err(ReportError::MixedPlatforms(list.join(", ")));
    }
    Ok(fixtures)
}

/// Replace stored normalisation with one against `key` in each app.
pub fn renormalise(mut records: Vec<CampaignRecord>, key: &BaselineKey) -> Vec<CampaignRecord> {
    let bases: BTreeMap<String, (String, Option<f64>, Option<u64>)> = records
        .iter()
        .filter(|r| r.valid && r.lmul.is_none() && r.compiler == key.compiler && r.mode == key.mode)
        .map(|r| (r.app.clone(), (r.id.clone(), r.runtime_ns, r.counts.retired)))
        .collect();
    for r in &mut records {
        match bases.get(&r.app) {
            Some((id, rt, ret)) if r.valid => {
                r.baseline = id.clone();
                r.speedup = rt.zip(r.runtime_ns).and_then(|(b, v)| analytics::speedup(b, v).ok());
                r.reduction = ret
                    .zip(r.counts.retired)
                    .and_then(|(b, v)| analytics::instruction_reduction(b as f64, v as f64).ok());
            }
            _ => {
                r.speedup = None;
                r.reduction = None;
            }
        }
    }
    records
}

const TABLE_EVENTS: [EventKind; 7] = [
    EventKind::Retired,
    EventKind::VecLd,
    EventKind::VecSt,
    EventKind::Vec,
    EventKind::FpLd,
    EventKind::FpSt,
    EventKind::Fp,
];

fn calibration_table(fixtures: &[ReplayFixture], params: &CalibrationParams) -> Result<Document, ReportError> {
    let mut doc = Document::new(
        ReportKind::CalibrationTable,
        "Counter calibration (* within tolerance on an exercising kernel, ! out of tolerance)",
        &["kernel", "ref-ins", "retired-ins", "vec-ld-ins", "vec-st-ins", "vec-ins", "fp-ld-ins", "fp-st-ins", "fp-ins"],
    );
    let mut samples = Vec::new();
    let mut refs = Vec::new();
    for f in fixtures {
        samples.extend(f.samples());
        refs.extend(f.references()?);
    }
    let report = calibrate_suite(&samples, &refs, params);
    for reference in &refs {
        let k = &reference.kernel;
        let mut row = vec![k.clone(), format_count(reference.counts.retired as f64)];
        doc.tidy(k, k, "ref-ins", "reference", reference.counts.retired as f64);
        for e in TABLE_EVENTS {
            let verdict = report.verdict(e).expect("all events classified");
            let check = verdict.per_kernel.iter().find(|c| &c.kernel == k).expect("one check per reference");
            let exercised = check.reference as f64 >= params.floor;
            let cell = match check.observed_mean {
                None => "n/a".to_string(),
                Some(m) => {
                    let mark = match check.pass {
                        Some(false) => "!",
                        Some(true) if exercised => "*",
                        _ => "",
                    };
                    format!("{}{mark}", format_count(m))
                }
            };
            row.push(cell);
            doc.tidy(k, k, e.name(), "reference", check.reference as f64);
            if let Some(m) = check.observed_mean {
                doc.tidy(k, k, e.name(), "observed_mean", m);
            }
            if let Some(err) = check.relative_error {
                doc.tidy(k, k, e.name(), "relative_error", err);
            }
            if let Some(p) = check.pass {
                doc.tidy(k, k, e.name(), "pass", if p { 1.0 } else { 0.0 });
            }
        }
        doc.rows.push(row);
    }
    for v in &report.verdicts {
        doc.notes.push(format!("{}: {:?}", v.event, v.verdict).to_lowercase());
    }
    let names = |es: &[EventKind]| es.iter().map(|e| e.name()).collect::<Vec<_>>().join(", ");
    doc.notes.push(format!("usable: {}", names(&report.usable)));
    doc.notes.push(format!("excluded: {}", names(&report.excluded)));
    Ok(doc)
}

struct KernelGops<'a> {
    spec: &'a KernelSpec,
    gops: f64,
    epi: u64,
}

/// Mean over runs of each run's Gops/s, for kernels whose spec is known.
fn kernel_gops(f: &ReplayFixture) -> Vec<KernelGops<'_>> {
    let cfg = f.vector_config();
    let samples = f.samples();
    f.kernels
        .iter()
        .filter_map(|k| {
            let spec = k.spec_echo.as_ref()?;
            let results: Vec<_> = samples
                .iter()
                .filter(|s| s.kernel_name == k.name && s.succeeded())
                .filter_map(|s| analytics::throughput::<f64>(spec, &cfg, s).ok())
                .collect();
            if results.is_empty() {
                return None;
            }
            let gops = results.iter().map(|r| r.gops_per_sec).sum::<f64>() / results.len() as f64;
            Some(KernelGops {
                spec,
                gops,
                epi: results[0].elements_per_inst,
            })
        })
        .collect()
}

fn config_label(spec: &KernelSpec) -> String {
    if spec.pattern == Pattern::ScalarRef {
        spec.sew.to_string()
    } else {
        format!("{}/{}", spec.sew, spec.lmul)
    }
}

fn throughput_table(fixtures: &[ReplayFixture]) -> Document {
    let mut doc = Document::new(
        ReportKind::ThroughputTable,
        "Element throughput (Gops/s, mean of runs)",
        &["kernel", "pattern", "inst", "sew", "lmul", "elems/inst", "gops"],
    );
    for f in fixtures {
        for k in kernel_gops(f) {
            let s = k.spec;
            doc.rows.push(vec![
                s.name.clone(),
                s.pattern.to_string(),
                s.target_inst.clone(),
                s.sew.bits().to_string(),
                s.lmul.to_string(),
                k.epi.to_string(),
                fmt_gops(k.gops),
            ]);
            doc.tidy(&s.name, &s.target_inst, &config_label(s), "gops_per_sec", k.gops);
            doc.tidy(&s.name, &s.target_inst, &config_label(s), "elements_per_inst", k.epi as f64);
        }
    }
    doc
}

fn stride_compare(fixtures: &[ReplayFixture]) -> Document {
    let mut doc = Document::new(
        ReportKind::StrideCompare,
        "Non-unit-stride gather (Gops/s of useful elements)",
        &["sew", "lmul", "stride", "strided", "masked", "scalar"],
    );
    for f in fixtures {
        let all = kernel_gops(f);
        let scalar: BTreeMap<(Sew, u32), &KernelGops> = all
            .iter()
            .filter(|k| k.spec.pattern == Pattern::ScalarRef)
            .map(|k| ((k.spec.sew, k.spec.stride_elems), k))
            .collect();
        for strided in all.iter().filter(|k| k.spec.pattern == Pattern::StridedLoad) {
            let s = strided.spec;
            let masked = all.iter().find(|k| {
                k.spec.pattern == Pattern::MaskedUnitLoad
                    && k.spec.sew == s.sew
                    && k.spec.lmul == s.lmul
                    && k.spec.stride_elems == s.stride_elems
            });
            let sc = scalar.get(&(s.sew, s.stride_elems));
            let cell = |k: Option<&KernelGops>| k.map_or_else(|| "missing".to_string(), |k| fmt_gops(k.gops));
            doc.rows.push(vec![
                s.sew.bits().to_string(),
                s.lmul.to_string(),
                s.stride_elems.to_string(),
                fmt_gops(strided.gops),
                cell(masked),
                cell(sc.copied()),
            ]);
            let variant = config_label(s);
            doc.tidy(&s.name, "strided", &variant, "gops_per_sec", strided.gops);
            if let Some(m) = masked {
                doc.tidy(&m.spec.name, "masked", &variant, "gops_per_sec", m.gops);
            }
            if let Some(k) = sc {
                doc.tidy(&k.spec.name, "scalar", &variant, "gops_per_sec", k.gops);
            }
        }
    }
    doc
}

fn tail_overhead(fixtures: &[ReplayFixture]) -> Document {
    let mut doc = Document::new(
        ReportKind::TailOverheadCurve,
        "Tail handling by setvl and by mask (Gops/s)",
        &["sew", "lmul", "active", "setvl", "mask", "loss"],
    );
    for f in fixtures {
        let all = kernel_gops(f);
        let mut pairs: BTreeMap<(u32, String, u32), (Option<&KernelGops>, Option<&KernelGops>)> = BTreeMap::new();
        for k in &all {
            let Some(active) = k.spec.active_elems else { continue };
            let slot = pairs.entry((k.spec.sew.bits(), k.spec.lmul.to_string(), active)).or_default();
            match k.spec.pattern {
                Pattern::TailVlLoad => slot.0 = Some(k),
                Pattern::TailMaskLoad => slot.1 = Some(k),
                _ => {}
            }
        }
        for ((sew, lmul, active), (vl, mask)) in pairs {
            let loss = vl.zip(mask).map(|(a, b)| analytics::loss_fraction(a.gops, b.gops));
            let cell = |k: Option<&KernelGops>| k.map_or_else(|| "missing".to_string(), |k| fmt_gops(k.gops));
            doc.rows.push(vec![
                sew.to_string(),
                lmul.clone(),
                active.to_string(),
                cell(vl),
                cell(mask),
                loss.map_or_else(|| "missing".to_string(), |l| format!("{:.1}%", l * 100.0)),
            ]);
            let variant = format!("e{sew}/{lmul}/a{active}");
            if let Some(k) = vl {
                doc.tidy(&k.spec.name, "setvl", &variant, "gops_per_sec", k.gops);
            }
            if let Some(k) = mask {
                doc.tidy(&k.spec.name, "mask", &variant, "gops_per_sec", k.gops);
                if let Some(l) = loss {
                    doc.tidy(&k.spec.name, "mask", &variant, "loss_fraction", l);
                }
            }
        }
    }
    doc
}

fn variant_key(r: &CampaignRecord) -> String {
    format!("{}:{}", r.compiler, r.mode)
}

fn bars(kind: ReportKind, records: &[CampaignRecord], metric: fn(&CampaignRecord) -> Option<f64>, name: &str) -> Document {
    let flat: Vec<&CampaignRecord> = records.iter().filter(|r| r.lmul.is_none()).collect();
    let mut variants: Vec<String> = Vec::new();
    let mut apps: Vec<String> = Vec::new();
    for r in &flat {
        let v = variant_key(r);
        if !variants.contains(&v) {
            variants.push(v);
        }
        if !apps.contains(&r.app) {
            apps.push(r.app.clone());
        }
    }
    let title = match kind {
        ReportKind::SpeedupBars => "Runtime speedup over the baseline",
        _ => "Retired-instruction reduction over the baseline",
    };
    let mut columns = vec!["app".to_string()];
    columns.extend(variants.iter().cloned());
    let mut doc = Document::new(kind, title, &[]);
    doc.columns = columns;
    for app in &apps {
        let mut row = vec![app.clone()];
        for v in &variants {
            let rec = flat.iter().find(|r| &r.app == app && &variant_key(r) == v);
            let val = rec.and_then(|r| metric(r));
            row.push(match rec {
                Some(r) if !r.valid => "invalid".to_string(),
                _ => fmt_ratio(val),
            });
            if let (Some(r), Some(x)) = (rec, val) {
                doc.tidy(&r.id, app, v, name, x);
            }
        }
        doc.rows.push(row);
    }
    if let Some(b) = flat.iter().find(|r| r.is_baseline()) {
        doc.notes.push(format!("baseline: {}", variant_key(b)));
    }
    doc
}

fn mix_stacks(records: &[CampaignRecord]) -> Document {
    let mut doc = Document::new(
        ReportKind::MixStacks,
        "Retired-instruction mix",
        &["record", "retired", "vec-ld", "vec-st", "fp-ld", "fp-st", "other"],
    );
    for r in records.iter().filter(|r| r.valid) {
        let usable: Vec<EventKind> = r.counts.present().map(|(e, _)| e).collect();
        let mut counts = EventCounts::default();
        for (e, v) in r.counts.present() {
            counts[e] = v;
        }
        match analytics::instruction_mix(&counts, &usable) {
            Ok(mix) => {
                let mut row = vec![r.id.clone(), format_count(mix.retired as f64)];
                for &(e, v) in &mix.components {
                    row.push(format_count(v as f64));
                    doc.tidy(&r.id, &r.app, e.name(), "count", v as f64);
                    doc.tidy(&r.id, &r.app, e.name(), "fraction", mix.fraction::<f64>(v));
                }
                row.push(format_count(mix.other as f64));
                doc.tidy(&r.id, &r.app, "other", "count", mix.other as f64);
                doc.tidy(&r.id, &r.app, "other", "fraction", mix.fraction::<f64>(mix.other));
                doc.tidy(&r.id, &r.app, "retired-ins", "count", mix.retired as f64);
                if mix.clamped {
                    doc.notes.push(format!("{}: components exceed retired; other clamped to 0", r.id));
                }
                doc.rows.push(row);
            }
            Err(e) => doc.notes.push(format!("{}: {e}", r.id)),
        }
    }
    doc
}

fn lmul_sweep(records: &[CampaignRecord]) -> Document {
    let mut doc = Document::new(
        ReportKind::LmulSweep,
        "LMUL sweep (speedup / reduction over the baseline)",
        &["app", "compiler", "lmul", "speedup", "reduction"],
    );
    let mut groups: Vec<(String, String)> = Vec::new();
    for r in records.iter().filter(|r| r.lmul.is_some()) {
        let g = (r.app.clone(), r.compiler.clone());
        if !groups.contains(&g) {
            groups.push(g);
        }
    }
    for (app, compiler) in groups {
        let Some(base) = records
            .iter()
            .find(|r| r.app == app && r.valid && r.id == r.baseline)
            .or_else(|| records.iter().find(|r| r.app == app && r.valid && Some(r.id.as_str()) == records.iter().find(|x| x.app == app).map(|x| x.baseline.as_str())))
        else {
            doc.notes.push(format!("{app}/{compiler}: no valid baseline record"));
            continue;
        };
        let measure = |r: &CampaignRecord| -> Option<Measurement<f64>> {
            Some(Measurement {
                runtime_ns: r.runtime_ns?,
                retired: r.counts.retired?,
            })
        };
        let Some(base_m) = measure(base) else {
            doc.notes.push(format!("{app}/{compiler}: baseline lacks runtime or retired count"));
            continue;
        };
        let in_group = |r: &&CampaignRecord| r.app == app && r.compiler == compiler && r.valid;
        let default = records
            .iter()
            .filter(in_group)
            .find(|r| r.mode == Mode::Autovec && r.lmul.is_none());
        let points: Vec<(SweepPoint<f64>, &CampaignRecord)> = records
            .iter()
            .filter(in_group)
            .filter_map(|r| {
                Some((
                    SweepPoint {
                        lmul: r.lmul?,
                        measurement: measure(r)?,
                    },
                    r,
                ))
            })
            .collect();
        let pts: Vec<SweepPoint<f64>> = points.iter().map(|(p, _)| *p).collect();
        let Ok(summary) = lmul_sweep_summary(base_m, default.and_then(measure), &pts) else {
            doc.notes.push(format!("{app}/{compiler}: non-positive measurement"));
            continue;
        };
        for row in &summary.rows {
            let rec = points.iter().find(|(p, _)| p.lmul == row.lmul).map(|(_, r)| *r);
            doc.rows.push(vec![
                app.clone(),
                compiler.clone(),
                row.lmul.to_string(),
                fmt_ratio(row.speedup),
                fmt_ratio(row.reduction),
            ]);
            if let Some(r) = rec {
                let variant = format!("lmul{}", row.lmul);
                if let Some(s) = row.speedup {
                    doc.tidy(&r.id, &app, &variant, "speedup", s);
                }
                if let Some(x) = row.reduction {
                    doc.tidy(&r.id, &app, &variant, "reduction", x);
                }
            }
        }
        let best = summary.best_lmul.map_or_else(|| "none".to_string(), |l| format!("lmul{l}"));
        let mut note = format!("{app}/{compiler}: best {best}");
        if let Some(d) = summary.default_speedup {
            let _ = write!(note, ", default {d:.2}x");
        }
        if let Some(b) = summary.best_beats_default {
            let _ = write!(note, ", best beats default: {}", if b { "yes" } else { "no" });
        }
        if !summary.missing.is_empty() {
            let list: Vec<String> = summary.missing.iter().map(|l| format!("lmul{l}")).collect();
            let _ = write!(note, ", missing {}", list.join(" "));
        }
        doc.notes.push(note);
        if let (Some(l), Some((_, r))) = (summary.best_lmul, points.iter().find(|(p, _)| Some(p.lmul) == summary.best_lmul)) {
            doc.tidy(&r.id, &app, "best", "best_lmul", l as f64);
        }
        if let (Some(d), Some(r)) = (summary.default_speedup, default) {
            doc.tidy(&r.id, &app, "default", "speedup", d);
        }
    }
    doc
}

/// Whether `path` holds campaign records rather than kernel samples.
pub fn looks_like_records(path: &Path) -> bool {
    if path.is_dir() {
        path.join(crate::store::RECORDS_FILE).exists()
    } else {
        path.extension().is_some_and(|e| e == "jsonl")
    }
}
