//! Deterministic generator for dependency-free RVV microbenchmark kernels.
//!
//! Every kernel has the same shape:
//!
//! ```text
//! rvvprobe_kernel(a0 = iterations, a1 = buffer):
//!     prologue      stage operands, build masks, vsetvli
//! .Lrvvprobe_loop:
//!     body          `unroll` target instructions, destinations rotating
//!     addi a0, a0, -1
//!     bnez a0, .Lrvvprobe_loop
//!     ret
//! ```
//!
//! Register conventions: `a3` receives `vl`, `a4` holds an AVL or a byte
//! offset, `a5` the stride in bytes, `a6` the staging value, `a2` and
//! `t0..t6` secondary base addresses.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inst::{InstCategory, InstClass, UnsupportedInstruction};
use crate::vtype::{compute_vlmax, Lmul, Policy, Sew, VectorConfig, VtypeError};

pub const ENTRY_SYMBOL: &str = "rvvprobe_kernel";
pub const LOOP_LABEL: &str = ".Lrvvprobe_loop";
pub const ARCH_STRING: &str = "rv64gcv_zfh_zvfh";
pub const DEFAULT_ITERATIONS: u64 = 100_000_000;
pub const DEFAULT_UNROLL: u32 = 128;
/// L1-resident working set for memory kernels.
pub const MEMORY_BUFFER_BYTES: usize = 16 * 1024;
pub const BUFFER_ALIGN: usize = 64;
pub const METADATA_VERSION: u32 = 1;

/// Scalar integer destinations (all caller-saved).
const INT_ROTATION: [&str; 8] = ["t0", "t1", "t2", "t3", "t4", "t5", "t6", "a7"];
/// Scalar FP destinations (all caller-saved).
const FP_ROTATION: [&str; 16] = [
    "ft0", "ft1", "ft2", "ft3", "ft4", "ft5", "ft6", "ft7", "ft8", "ft9", "ft10", "ft11", "fa0",
    "fa1", "fa2", "fa3",
];
const CHUNK_BASES: [&str; 7] = ["t0", "t1", "t2", "t3", "t4", "t5", "t6"];
/// Scalar offsets wrap inside the reach of a 12-bit immediate.
const SCALAR_WINDOW: u64 = 2048;
/// First destination group when v0 holds a live mask.
const MASKED_FIRST_VREG: u32 = 8;
const MASKED_VREG_SPAN: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    UnitLoad,
    UnitStore,
    StridedLoad,
    StridedStore,
    MaskedUnitLoad,
    TailVlLoad,
    TailMaskLoad,
    Arith,
    ScalarRef,
}

impl Pattern {
    pub fn name(self) -> &'static str {
        match self {
            Pattern::UnitLoad => "unit-load",
            Pattern::UnitStore => "unit-store",
            Pattern::StridedLoad => "strided-load",
            Pattern::StridedStore => "strided-store",
            Pattern::MaskedUnitLoad => "masked-unit-load",
            Pattern::TailVlLoad => "tail-vl-load",
            Pattern::TailMaskLoad => "tail-mask-load",
            Pattern::Arith => "arith",
            Pattern::ScalarRef => "scalar-ref",
        }
    }

    pub fn is_masked(self) -> bool {
        matches!(self, Pattern::MaskedUnitLoad | Pattern::TailMaskLoad)
    }

    pub fn is_tail(self) -> bool {
        matches!(self, Pattern::TailVlLoad | Pattern::TailMaskLoad)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn one() -> u32 {
    1
}
fn default_iterations() -> u64 {
    DEFAULT_ITERATIONS
}
fn default_unroll() -> u32 {
    DEFAULT_UNROLL
}

/// Full parameterization of one microbenchmark.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    pub target_inst: String,
    #[serde(rename = "sew_bits")]
    pub sew: Sew,
    pub lmul: Lmul,
    pub pattern: Pattern,
    #[serde(default = "one")]
    pub stride_elems: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_elems: Option<u32>,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    #[serde(default = "default_unroll")]
    pub unroll: u32,
    #[serde(default)]
    pub tail_policy: Policy,
    #[serde(default)]
    pub mask_policy: Policy,
}

impl KernelSpec {
    pub fn new(target_inst: &str, sew: Sew, lmul: Lmul, pattern: Pattern) -> Self {
        let mut spec = KernelSpec {
            name: String::new(),
            target_inst: target_inst.to_string(),
            sew,
            lmul,
            pattern,
            stride_elems: 1,
            active_elems: None,
            iterations: DEFAULT_ITERATIONS,
            unroll: DEFAULT_UNROLL,
            tail_policy: Policy::Agnostic,
            mask_policy: Policy::Agnostic,
        };
        spec.name = spec.default_name();
        spec
    }

    pub fn default_name(&self) -> String {
        let mut name = format!("{}_{}_{}", self.pattern, self.target_inst, self.sew);
        if self.pattern != Pattern::ScalarRef {
            let _ = write!(name, "_{}", self.lmul);
        }
        if self.stride_elems != 1 {
            let _ = write!(name, "_s{}", self.stride_elems);
        }
        if let Some(a) = self.active_elems {
            let _ = write!(name, "_a{a:04}");
        }
        name
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_stride(mut self, stride: u32) -> Self {
        self.stride_elems = stride;
        self.name = self.default_name();
        self
    }

    pub fn with_active(mut self, active: u32) -> Self {
        self.active_elems = Some(active);
        self.name = self.default_name();
        self
    }

    pub fn with_iterations(mut self, iterations: u64) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_unroll(mut self, unroll: u32) -> Self {
        self.unroll = unroll;
        self
    }

    /// File-system friendly stem for the `.s` file and its sidecar.
    pub fn file_stem(&self) -> String {
        self.name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error(transparent)]
    Vtype(#[from] VtypeError),
    #[error(transparent)]
    Unsupported(#[from] UnsupportedInstruction),
    #[error("pattern {pattern} is incompatible with `{mnemonic}`: {reason}")]
    Incompatible {
        pattern: Pattern,
        mnemonic: String,
        reason: String,
    },
    #[error("active_elems {active} is outside 1..={vlmax}")]
    ActiveOutOfRange { active: u64, vlmax: u64 },
    #[error("unroll {unroll} is incompatible with register rotation: must be a positive multiple of {cycle}")]
    Unroll { unroll: u32, cycle: u32 },
    #[error("invalid kernel spec: {0}")]
    Invalid(String),
}

/// Sidecar record echoed into the kernel as a structured comment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelMetadata {
    pub format_version: u32,
    pub entry_symbol: String,
    pub vlen_bits: u32,
    pub buffer_bytes: usize,
    pub buffer_align: usize,
    /// Active elements processed by one target instruction.
    pub elements_per_inst: u64,
    pub spec: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssemblyModule {
    pub text: String,
    pub entry_symbol: String,
    pub buffer_bytes: usize,
    pub metadata: KernelMetadata,
}

impl AssemblyModule {
    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.metadata).expect("metadata serializes")
    }
}

/// Element operations per target instruction for `spec` on `cfg`.
pub fn elements_per_inst(spec: &KernelSpec, cfg: &VectorConfig) -> Result<u64, GenError> {
    if spec.pattern == Pattern::ScalarRef {
        return Ok(1);
    }
    let vlmax = compute_vlmax(cfg, spec.sew, spec.lmul)?;
    Ok(match spec.pattern {
        Pattern::MaskedUnitLoad => vlmax.div_ceil(spec.stride_elems.max(1) as u64),
        Pattern::TailVlLoad | Pattern::TailMaskLoad => spec.active_elems.unwrap_or(0) as u64,
        _ => vlmax,
    })
}

fn round_up(n: usize, align: usize) -> usize {
    n.div_ceil(align) * align
}

fn incompatible(spec: &KernelSpec, reason: impl Into<String>) -> GenError {
    GenError::Incompatible {
        pattern: spec.pattern,
        mnemonic: spec.target_inst.clone(),
        reason: reason.into(),
    }
}

/// Validated layout decisions for one kernel.
struct Plan {
    class: InstClass,
    vlmax: u64,
    /// Destination rotation: vector group bases or scalar register names.
    rotation: Vec<String>,
    elements_per_inst: u64,
    buffer_bytes: usize,
    /// Bytes reserved at the head of the buffer for the tail mask pattern.
    mask_scratch: usize,
}

const VECTOR_ARITH: [&str; 8] = [
    "vadd.vv", "vmul.vv", "vmacc.vv", "vdiv.vv", "vfadd.vv", "vfmul.vv", "vfmacc.vv", "vfdiv.vv",
];
const SCALAR_ARITH: [&str; 11] = [
    "add", "mul", "div", "fadd.s", "fadd.d", "fmul.s", "fmul.d", "fmadd.s", "fmadd.d", "fdiv.s", "fdiv.d",
];

impl Plan {
    fn new(spec: &KernelSpec, cfg: &VectorConfig) -> Result<Plan, GenError> {
        if spec.iterations == 0 {
            return Err(GenError::Invalid("iterations must be positive".into()));
        }
        if spec.unroll == 0 {
            return Err(GenError::Unroll { unroll: 0, cycle: 1 });
        }
        if spec.iterations.checked_mul(spec.unroll as u64).is_none() {
            return Err(GenError::Invalid("iterations * unroll overflows 64 bits".into()));
        }
        if spec.stride_elems == 0 {
            return Err(GenError::Invalid("stride_elems must be positive".into()));
        }
        let class = InstClass::lookup(&spec.target_inst)?;
        let m = class.mnemonic;
        let is = |prefix: &str| m.starts_with(prefix) && class.encoded_width().is_some();
        let ok = match spec.pattern {
            Pattern::UnitLoad | Pattern::MaskedUnitLoad | Pattern::TailVlLoad | Pattern::TailMaskLoad => {
                is("vle")
            }
            Pattern::UnitStore => is("vse"),
            Pattern::StridedLoad => is("vlse"),
            Pattern::StridedStore => is("vsse"),
            Pattern::Arith => VECTOR_ARITH.contains(&m),
            Pattern::ScalarRef => {
                class.category.is_scalar()
                    && (class.is_scalar_load() || class.is_scalar_store() || SCALAR_ARITH.contains(&m))
            }
        };
        if !ok {
            return Err(incompatible(spec, "mnemonic does not implement this access pattern"));
        }
        if spec.pattern != Pattern::ScalarRef && !spec.lmul.is_integral() {
            return Err(incompatible(spec, "kernels are generated for integral LMUL only"));
        }
        if let Some(w) = class.encoded_width() {
            if w != spec.sew {
                return Err(incompatible(spec, format!("mnemonic width {w} differs from sew {}", spec.sew)));
            }
        }
        if class.element_type == crate::inst::ElementType::Fp
            && class.category == InstCategory::VectorArith
            && spec.sew == Sew::E8
        {
            return Err(incompatible(spec, "no 8-bit floating point"));
        }
        if matches!(m, "add" | "mul" | "div") && spec.sew != Sew::E64 {
            return Err(incompatible(spec, "RV64 integer arithmetic operates on 64-bit registers"));
        }
        if spec.pattern.is_tail() != spec.active_elems.is_some() {
            return Err(GenError::Invalid(
                "active_elems is required for and only allowed on tail patterns".into(),
            ));
        }
        let esize = spec.sew.bytes();

        if spec.pattern == Pattern::ScalarRef {
            let fp = class.category != InstCategory::ScalarInt;
            let rotation: Vec<String> = if fp {
                FP_ROTATION.iter().map(|s| s.to_string()).collect()
            } else {
                INT_ROTATION.iter().map(|s| s.to_string()).collect()
            };
            check_unroll(spec.unroll, rotation.len() as u32)?;
            return Ok(Plan {
                class,
                vlmax: 1,
                rotation,
                elements_per_inst: 1,
                buffer_bytes: MEMORY_BUFFER_BYTES.max(round_up(SCALAR_WINDOW as usize + esize, BUFFER_ALIGN)),
                mask_scratch: 0,
            });
        }

        if !matches!(spec.pattern, Pattern::StridedLoad | Pattern::StridedStore | Pattern::MaskedUnitLoad)
            && spec.stride_elems != 1
        {
            return Err(incompatible(spec, "stride_elems only applies to strided and masked patterns"));
        }
        let vlmax = compute_vlmax(cfg, spec.sew, spec.lmul)?;
        let lmul = spec.lmul.group_regs();
        let rotation: Vec<String> = if spec.pattern.is_masked() {
            (MASKED_FIRST_VREG..MASKED_FIRST_VREG + MASKED_VREG_SPAN)
                .step_by(lmul as usize)
                .map(|g| g.to_string())
                .collect()
        } else {
            (0..crate::vtype::NUM_VREGS).step_by(lmul as usize).map(|g| g.to_string()).collect()
        };
        let mut cycle = rotation.len() as u32;
        let mut mask_scratch = 0;
        let area = match spec.pattern {
            Pattern::StridedLoad | Pattern::StridedStore => spec.stride_elems as usize * vlmax as usize * esize,
            Pattern::MaskedUnitLoad => {
                let s = spec.stride_elems;
                if !matches!(s, 2 | 4 | 8) {
                    return Err(incompatible(spec, "masked stride emulation supports strides 2, 4 and 8"));
                }
                if vlmax % s as u64 != 0 {
                    return Err(incompatible(spec, format!("VLMAX {vlmax} is not a multiple of the stride {s}")));
                }
                cycle = lcm(cycle, s);
                s as usize * vlmax as usize * esize
            }
            Pattern::TailVlLoad | Pattern::TailMaskLoad => {
                let active = spec.active_elems.unwrap_or(0) as u64;
                if active == 0 || active > vlmax {
                    return Err(GenError::ActiveOutOfRange { active, vlmax });
                }
                mask_scratch = round_up(vlmax.div_ceil(64) as usize * 8, BUFFER_ALIGN);
                mask_scratch + vlmax as usize * esize
            }
            _ => vlmax as usize * esize,
        };
        check_unroll(spec.unroll, cycle)?;
        Ok(Plan {
            class,
            vlmax,
            rotation,
            elements_per_inst: elements_per_inst(spec, cfg)?,
            buffer_bytes: round_up(MEMORY_BUFFER_BYTES.max(area), BUFFER_ALIGN),
            mask_scratch,
        })
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

fn check_unroll(unroll: u32, cycle: u32) -> Result<(), GenError> {
    if unroll == 0 || !unroll.is_multiple_of(cycle) {
        return Err(GenError::Unroll { unroll, cycle });
    }
    Ok(())
}

/// Bit pattern of 1.0 at the given floating-point width.
fn fp_one_bits(sew: Sew) -> u64 {
    match sew {
        Sew::E16 => half::f16::ONE.to_bits() as u64,
        Sew::E32 => 1.0f32.to_bits() as u64,
        _ => 1.0f64.to_bits(),
    }
}

/// Byte whose bits select every `stride`-th element (`1010...` for stride 2).
fn stride_mask_byte(stride: u32) -> u8 {
    (0..8).filter(|i| i % stride == 0).fold(0u8, |acc, i| acc | (1 << i))
}

struct Emitter {
    out: String,
}

impl Emitter {
    fn ins(&mut self, text: impl AsRef<str>) {
        self.out.push('\t');
        self.out.push_str(text.as_ref());
        self.out.push('\n');
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.out.push_str(text.as_ref());
        self.out.push('\n');
    }
}

/// Emit the assembly module for `spec` on a machine with `cfg`.
pub fn generate_kernel(spec: &KernelSpec, cfg: &VectorConfig) -> Result<AssemblyModule, GenError> {
    let plan = Plan::new(spec, cfg)?;
    let metadata = KernelMetadata {
        format_version: METADATA_VERSION,
        entry_symbol: ENTRY_SYMBOL.to_string(),
        vlen_bits: cfg.vlen_bits(),
        buffer_bytes: plan.buffer_bytes,
        buffer_align: BUFFER_ALIGN,
        elements_per_inst: plan.elements_per_inst,
        spec: spec.clone(),
    };
    let mut e = Emitter { out: String::new() };
    e.line(format!("# {} generated kernel `{}`", env!("CARGO_PKG_NAME"), spec.name));
    e.line(format!(
        "# {} {}",
        crate::asm::META_PREFIX,
        serde_json::to_string(&metadata).expect("metadata serializes")
    ));
    e.line(format!("# {ENTRY_SYMBOL}(a0 = iterations, a1 = buffer of {} bytes, {BUFFER_ALIGN}-byte aligned)", plan.buffer_bytes));
    e.ins(format!(".option arch, {ARCH_STRING}"));
    e.ins(".text");
    e.ins(format!(".globl {ENTRY_SYMBOL}"));
    e.ins(format!(".type {ENTRY_SYMBOL}, @function"));
    e.ins(".p2align 2");
    e.line(format!("{ENTRY_SYMBOL}:"));

    if spec.pattern == Pattern::ScalarRef {
        emit_scalar(&mut e, spec, &plan);
    } else {
        emit_vector(&mut e, spec, &plan);
    }

    e.ins("addi a0, a0, -1");
    e.ins(format!("bnez a0, {LOOP_LABEL}"));
    e.ins("ret");
    e.ins(format!(".size {ENTRY_SYMBOL}, .-{ENTRY_SYMBOL}"));

    Ok(AssemblyModule {
        text: e.out,
        entry_symbol: ENTRY_SYMBOL.to_string(),
        buffer_bytes: plan.buffer_bytes,
        metadata,
    })
}

fn emit_vector(e: &mut Emitter, spec: &KernelSpec, plan: &Plan) {
    let m = plan.class.mnemonic;
    let esize = spec.sew.bytes() as u64;
    let vtype = format!(
        "{}, {}, {}, {}",
        spec.sew,
        spec.lmul,
        spec.tail_policy.tail_token(),
        spec.mask_policy.mask_token()
    );
    let stride = spec.stride_elems;

    if spec.pattern == Pattern::MaskedUnitLoad {
        e.line("\t# mask: every stride-th element active");
        e.ins(format!("li a6, {:#04x}", stride_mask_byte(stride)));
        e.ins("vsetvli a3, zero, e8, m1, ta, ma");
        e.ins("vmv.v.x v0, a6");
    }
    if spec.pattern.is_tail() {
        if plan.mask_scratch < 2048 {
            e.ins(format!("addi a2, a1, {}", plan.mask_scratch));
        } else {
            e.ins(format!("li a2, {}", plan.mask_scratch));
            e.ins("add a2, a1, a2");
        }
    }
    if spec.pattern == Pattern::TailVlLoad {
        e.ins(format!("li a4, {}", spec.active_elems.unwrap_or(0)));
        e.ins(format!("vsetvli a3, a4, {vtype}"));
    } else {
        e.ins(format!("vsetvli a3, zero, {vtype}"));
    }
    match spec.pattern {
        Pattern::StridedLoad | Pattern::StridedStore => {
            e.ins(format!("li a5, {}", stride as u64 * esize));
        }
        Pattern::MaskedUnitLoad => {
            e.ins(format!("li a4, {}", plan.vlmax * esize));
            let mut prev = "a1";
            for base in CHUNK_BASES.iter().take(stride as usize - 1) {
                e.ins(format!("add {base}, {prev}, a4"));
                prev = base;
            }
        }
        Pattern::TailMaskLoad => {
            e.line("\t# mask: leading active_elems elements");
            let active = spec.active_elems.unwrap_or(0) as u64;
            for w in 0..plan.vlmax.div_ceil(64) {
                let lo = w * 64;
                let ones = active.saturating_sub(lo).min(64);
                let word: u64 = if ones == 64 { u64::MAX } else { (1u64 << ones) - 1 };
                e.ins(format!("li t0, {word:#x}"));
                e.ins(format!("sd t0, {}(a1)", w * 8));
            }
            e.ins("vlm.v v0, (a1)");
        }
        _ => {}
    }
    if matches!(spec.pattern, Pattern::Arith | Pattern::UnitStore | Pattern::StridedStore) {
        let value = if plan.class.element_type == crate::inst::ElementType::Fp {
            fp_one_bits(spec.sew)
        } else {
            1
        };
        e.ins(format!("li a6, {value:#x}"));
        for g in &plan.rotation {
            e.ins(format!("vmv.v.x v{g}, a6"));
        }
    }

    e.line(format!("{LOOP_LABEL}:"));
    let c = plan.rotation.len();
    for j in 0..spec.unroll as usize {
        let g = &plan.rotation[j % c];
        let line = match spec.pattern {
            Pattern::UnitLoad | Pattern::UnitStore => format!("{m} v{g}, (a1)"),
            Pattern::StridedLoad | Pattern::StridedStore => format!("{m} v{g}, (a1), a5"),
            Pattern::MaskedUnitLoad => {
                let k = j % stride as usize;
                let base = if k == 0 { "a1" } else { CHUNK_BASES[k - 1] };
                format!("{m} v{g}, ({base}), v0.t")
            }
            Pattern::TailVlLoad => format!("{m} v{g}, (a2)"),
            Pattern::TailMaskLoad => format!("{m} v{g}, (a2), v0.t"),
            Pattern::Arith => {
                let a = &plan.rotation[(j + 1) % c];
                let b = &plan.rotation[(j + 2) % c];
                format!("{m} v{g}, v{a}, v{b}")
            }
            Pattern::ScalarRef => unreachable!(),
        };
        e.ins(line);
    }
}

fn emit_scalar(e: &mut Emitter, spec: &KernelSpec, plan: &Plan) {
    let m = plan.class.mnemonic;
    let rot = &plan.rotation;
    let c = rot.len();
    let esize = spec.sew.bytes() as u64;
    let is_mem = plan.class.is_scalar_load() || plan.class.is_scalar_store();
    let fp = plan.class.category != InstCategory::ScalarInt;

    if !plan.class.is_scalar_load() {
        if fp {
            e.ins(format!("li a6, {:#x}", fp_one_bits(spec.sew)));
            let mv = if spec.sew == Sew::E32 { "fmv.w.x" } else { "fmv.d.x" };
            for r in rot {
                e.ins(format!("{mv} {r}, a6"));
            }
        } else {
            for r in rot {
                e.ins(format!("li {r}, 1"));
            }
        }
    }

    e.line(format!("{LOOP_LABEL}:"));
    for j in 0..spec.unroll as usize {
        let r = &rot[j % c];
        let line = if is_mem {
            let off = (j as u64 * spec.stride_elems as u64 * esize) % SCALAR_WINDOW;
            format!("{m} {r}, {off}(a1)")
        } else if m.starts_with("fmadd") {
            format!(
                "{m} {r}, {}, {}, {}",
                rot[(j + 1) % c],
                rot[(j + 2) % c],
                rot[(j + 3) % c]
            )
        } else {
            format!("{m} {r}, {}, {}", rot[(j + 1) % c], rot[(j + 2) % c])
        };
        e.ins(line);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteKind {
    Memory,
    StrideCompare,
    TailCompare,
    Arith,
    ScalarBaseline,
    /// The ten kernels used to calibrate the hardware counters.
    Calibration,
}

impl SuiteKind {
    pub const ALL: [SuiteKind; 6] = [
        SuiteKind::Memory,
        SuiteKind::StrideCompare,
        SuiteKind::TailCompare,
        SuiteKind::Arith,
        SuiteKind::ScalarBaseline,
        SuiteKind::Calibration,
    ];
}

impl std::str::FromStr for SuiteKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| format!("unknown suite `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub lmuls: Vec<Lmul>,
    pub iterations: u64,
    pub unroll: u32,
    pub stride: u32,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            lmuls: vec![Lmul::M1],
            iterations: DEFAULT_ITERATIONS,
            unroll: DEFAULT_UNROLL,
            stride: 2,
        }
    }
}

fn vmem(prefix: &str, sew: Sew) -> String {
    format!("{prefix}{}.v", sew.bits())
}

/// Catalog of kernel specs for one benchmark family.
pub fn generate_suite(kind: SuiteKind, cfg: &VectorConfig, opts: &SuiteOptions) -> Vec<KernelSpec> {
    let finish = |s: KernelSpec| s.with_iterations(opts.iterations).with_unroll(opts.unroll);
    let mut out = Vec::new();
    match kind {
        SuiteKind::Memory => {
            for &lmul in &opts.lmuls {
                for sew in Sew::ALL {
                    out.push(finish(KernelSpec::new(&vmem("vle", sew), sew, lmul, Pattern::UnitLoad)));
                    out.push(finish(KernelSpec::new(&vmem("vse", sew), sew, lmul, Pattern::UnitStore)));
                    out.push(finish(
                        KernelSpec::new(&vmem("vlse", sew), sew, lmul, Pattern::StridedLoad).with_stride(opts.stride),
                    ));
                    out.push(finish(
                        KernelSpec::new(&vmem("vsse", sew), sew, lmul, Pattern::StridedStore).with_stride(opts.stride),
                    ));
                }
            }
        }
        SuiteKind::StrideCompare => {
            const SCALAR_LOADS: [&str; 4] = ["lb", "lh", "lw", "ld"];
            for (li, &lmul) in opts.lmuls.iter().enumerate() {
                for (si, sew) in Sew::ALL.into_iter().enumerate() {
                    out.push(finish(
                        KernelSpec::new(&vmem("vlse", sew), sew, lmul, Pattern::StridedLoad).with_stride(opts.stride),
                    ));
                    // Two masked loads gather what one strided load does.
                    out.push(
                        KernelSpec::new(&vmem("vle", sew), sew, lmul, Pattern::MaskedUnitLoad)
                            .with_stride(opts.stride)
                            .with_iterations(opts.iterations)
                            .with_unroll(opts.unroll * opts.stride),
                    );
                    if li == 0 {
                        out.push(finish(
                            KernelSpec::new(SCALAR_LOADS[si], sew, Lmul::M1, Pattern::ScalarRef).with_stride(opts.stride),
                        ));
                    }
                }
            }
        }
        SuiteKind::TailCompare => {
            let vlmax = compute_vlmax(cfg, Sew::E8, Lmul::M1).expect("e8/m1 always fits");
            for active in 1..=vlmax as u32 {
                for pattern in [Pattern::TailVlLoad, Pattern::TailMaskLoad] {
                    out.push(finish(KernelSpec::new("vle8.v", Sew::E8, Lmul::M1, pattern).with_active(active)));
                }
            }
        }
        SuiteKind::Arith => {
            for &lmul in &opts.lmuls {
                for m in ["vfadd.vv", "vfmul.vv", "vfmacc.vv", "vfdiv.vv"] {
                    for sew in [Sew::E16, Sew::E32, Sew::E64] {
                        out.push(finish(KernelSpec::new(m, sew, lmul, Pattern::Arith)));
                    }
                }
                for m in ["vadd.vv", "vmul.vv", "vmacc.vv", "vdiv.vv"] {
                    for sew in Sew::ALL {
                        out.push(finish(KernelSpec::new(m, sew, lmul, Pattern::Arith)));
                    }
                }
            }
            for m in ["fadd.s", "fmul.s", "fmadd.s"] {
                out.push(finish(KernelSpec::new(m, Sew::E32, Lmul::M1, Pattern::ScalarRef)));
            }
            for m in ["add", "mul", "div"] {
                out.push(finish(KernelSpec::new(m, Sew::E64, Lmul::M1, Pattern::ScalarRef)));
            }
        }
        SuiteKind::ScalarBaseline => {
            let scalar = [
                ("lb", Sew::E8),
                ("lh", Sew::E16),
                ("lw", Sew::E32),
                ("ld", Sew::E64),
                ("sb", Sew::E8),
                ("sh", Sew::E16),
                ("sw", Sew::E32),
                ("sd", Sew::E64),
                ("flw", Sew::E32),
                ("fld", Sew::E64),
                ("fsw", Sew::E32),
                ("fsd", Sew::E64),
                ("add", Sew::E64),
                ("mul", Sew::E64),
                ("div", Sew::E64),
                ("fadd.s", Sew::E32),
                ("fadd.d", Sew::E64),
                ("fmul.s", Sew::E32),
                ("fmul.d", Sew::E64),
                ("fmadd.s", Sew::E32),
                ("fmadd.d", Sew::E64),
                ("fdiv.s", Sew::E32),
                ("fdiv.d", Sew::E64),
            ];
            for (m, sew) in scalar {
                out.push(finish(KernelSpec::new(m, sew, Lmul::M1, Pattern::ScalarRef)));
            }
        }
        SuiteKind::Calibration => {
            let rows: [(&str, &str, Sew, Pattern); 10] = [
                ("flw", "flw", Sew::E32, Pattern::ScalarRef),
                ("lw", "lw", Sew::E32, Pattern::ScalarRef),
                ("vle.vv", "vle32.v", Sew::E32, Pattern::UnitLoad),
                ("fsw", "fsw", Sew::E32, Pattern::ScalarRef),
                ("sw", "sw", Sew::E32, Pattern::ScalarRef),
                ("vse.vv", "vse32.v", Sew::E32, Pattern::UnitStore),
                ("vfadd.vv", "vfadd.vv", Sew::E32, Pattern::Arith),
                // Reported under the integer name; measured as the FP multiply-add.
                ("vmacc.vv", "vfmacc.vv", Sew::E32, Pattern::Arith),
                ("fadd", "fadd.s", Sew::E32, Pattern::ScalarRef),
                ("fmadd", "fmadd.s", Sew::E32, Pattern::ScalarRef),
            ];
            for (name, m, sew, pattern) in rows {
                out.push(finish(KernelSpec::new(m, sew, Lmul::M1, pattern)).named(name));
            }
        }
    }
    out
}
