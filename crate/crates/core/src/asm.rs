//! Parser for the GNU-syntax RV64 + RVV assembly subset emitted by the
//! kernel generator.
//!
//! The parser produces a flat [`Program`]; loop structure is recovered by
//! [`crate::refmodel::parse_kernel`].

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::inst::{InstClass, UnsupportedInstruction};
use crate::vtype::{Lmul, Policy, Sew};

/// Comment prefix that carries the generator's JSON metadata record.
pub const META_PREFIX: &str = "rvvprobe-meta:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AsmError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: unsupported instruction `{mnemonic}`")]
    Unsupported {
        line: usize,
        column: usize,
        mnemonic: String,
    },
    #[error("irreducible control flow: {0}")]
    ControlFlow(String),
    #[error("syntax error: no loop found")]
    NoLoop,
    #[error("malformed metadata block: {0}")]
    Metadata(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct XReg(pub u8);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FReg(pub u8);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VReg(pub u8);

impl XReg {
    pub const ZERO: XReg = XReg(0);
    pub const RA: XReg = XReg(1);
    pub const SP: XReg = XReg(2);
    pub const A0: XReg = XReg(10);
    pub const A1: XReg = XReg(11);

    pub fn abi_name(self) -> &'static str {
        const NAMES: [&str; 32] = [
            "zero", "ra", "sp", "gp", "tp", "t0", "t1", "t2", "s0", "s1", "a0", "a1", "a2", "a3",
            "a4", "a5", "a6", "a7", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10", "s11",
            "t3", "t4", "t5", "t6",
        ];
        NAMES[self.0 as usize]
    }

    pub fn parse(s: &str) -> Option<XReg> {
        if let Some(n) = s.strip_prefix('x') {
            return n.parse::<u8>().ok().filter(|&n| n < 32).map(XReg);
        }
        if s == "fp" {
            return Some(XReg(8));
        }
        (0..32u8).map(XReg).find(|r| r.abi_name() == s)
    }
}

impl FReg {
    pub fn abi_name(self) -> String {
        let n = self.0;
        match n {
            0..=7 => format!("ft{n}"),
            8..=9 => format!("fs{}", n - 8),
            10..=17 => format!("fa{}", n - 10),
            18..=27 => format!("fs{}", n - 16),
            _ => format!("ft{}", n - 20),
        }
    }

    pub fn parse(s: &str) -> Option<FReg> {
        let idx = |p: &str| s.strip_prefix(p).and_then(|n| n.parse::<u8>().ok());
        let n = if let Some(n) = idx("ft") {
            match n {
                0..=7 => n,
                8..=11 => n + 20,
                _ => return None,
            }
        } else if let Some(n) = idx("fs") {
            match n {
                0..=1 => n + 8,
                2..=11 => n + 16,
                _ => return None,
            }
        } else if let Some(n) = idx("fa") {
            if n > 7 {
                return None;
            }
            n + 10
        } else {
            let n = idx("f")?;
            if n > 31 {
                return None;
            }
            n
        };
        Some(FReg(n))
    }
}

impl VReg {
    pub fn parse(s: &str) -> Option<VReg> {
        s.strip_prefix('v')
            .and_then(|n| n.parse::<u8>().ok())
            .filter(|&n| n < 32)
            .map(VReg)
    }
}

impl fmt::Display for XReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abi_name())
    }
}

impl fmt::Display for FReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.abi_name())
    }
}

impl fmt::Display for VReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VtypeImm {
    pub sew: Sew,
    pub lmul: Lmul,
    pub vta: Policy,
    pub vma: Policy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Avl {
    Reg(XReg),
    Imm(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VArithOp {
    Add,
    Mul,
    Macc,
    Div,
    FAdd,
    FMul,
    FMacc,
    FDiv,
}

impl VArithOp {
    pub fn is_fp(self) -> bool {
        matches!(
            self,
            VArithOp::FAdd | VArithOp::FMul | VArithOp::FMacc | VArithOp::FDiv
        )
    }

    pub fn accumulates(self) -> bool {
        matches!(self, VArithOp::Macc | VArithOp::FMacc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FArithOp {
    Add,
    Mul,
    Madd,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchCond {
    Eq,
    Ne,
    Lt,
    Ge,
    Ltu,
    Geu,
}

/// Decoded operation with typed operands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op {
    Vsetvli { rd: XReg, avl: Avl, vtype: VtypeImm },
    VLoad { vd: VReg, base: XReg, stride: Option<XReg>, eew: Sew },
    VStore { vs3: VReg, base: XReg, stride: Option<XReg>, eew: Sew },
    VLoadMask { vd: VReg, base: XReg },
    VStoreMask { vs3: VReg, base: XReg },
    /// `.vv` arithmetic. For non-accumulating ops `vd = vs2 op vs1`; for the
    /// multiply-adds `vd = vs1 * vs2 + vd`.
    VArith { op: VArithOp, vd: VReg, vs1: VReg, vs2: VReg },
    VMvX { vd: VReg, rs1: XReg },
    VMvI { vd: VReg, imm: i64 },
    Load { rd: XReg, base: XReg, offset: i64, width: Sew, signed: bool },
    Store { rs2: XReg, base: XReg, offset: i64, width: Sew },
    FLoad { rd: FReg, base: XReg, offset: i64, width: Sew },
    FStore { rs2: FReg, base: XReg, offset: i64, width: Sew },
    FArith { op: FArithOp, width: Sew, rd: FReg, rs1: FReg, rs2: FReg, rs3: Option<FReg> },
    FMvFromX { width: Sew, rd: FReg, rs1: XReg },
    IntR { op: IntOp, rd: XReg, rs1: XReg, rs2: XReg },
    Addi { rd: XReg, rs1: XReg, imm: i64 },
    Slli { rd: XReg, rs1: XReg, shamt: u32 },
    Li { rd: XReg, imm: i64 },
    Mv { rd: XReg, rs: XReg },
    La { rd: XReg, symbol: String },
    Branch { cond: BranchCond, rs1: XReg, rs2: XReg, target: String },
    Ret,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub class: InstClass,
    pub op: Op,
    pub masked: bool,
    pub line: usize,
}

impl Instruction {
    pub fn mnemonic(&self) -> &'static str {
        self.class.mnemonic
    }

    /// Class as seen by event attribution (masked unit-stride is distinct).
    pub fn effective_class(&self) -> InstClass {
        if self.masked {
            self.class.masked()
        } else {
            self.class
        }
    }

    pub fn branch_target(&self) -> Option<&str> {
        match &self.op {
            Op::Branch { target, .. } => Some(target),
            _ => None,
        }
    }

    /// Vector register groups written: (first register, registers spanned).
    pub fn vector_def(&self, lmul_regs: u32) -> Option<(u8, u32)> {
        match &self.op {
            Op::VLoad { vd, .. } | Op::VArith { vd, .. } | Op::VMvX { vd, .. } | Op::VMvI { vd, .. } => {
                Some((vd.0, lmul_regs))
            }
            Op::VLoadMask { vd, .. } => Some((vd.0, 1)),
            _ => None,
        }
    }

    /// Vector registers read as data sources (mask register excluded).
    pub fn vector_uses(&self) -> Vec<u8> {
        match &self.op {
            Op::VStore { vs3, .. } | Op::VStoreMask { vs3, .. } => vec![vs3.0],
            Op::VArith { op, vd, vs1, vs2 } => {
                let mut v = vec![vs1.0, vs2.0];
                if op.accumulates() {
                    v.push(vd.0);
                }
                v
            }
            _ => Vec::new(),
        }
    }

    /// Integer register written, if any (writes to `zero` are dropped).
    pub fn x_def(&self) -> Option<XReg> {
        let rd = match &self.op {
            Op::Vsetvli { rd, .. }
            | Op::Load { rd, .. }
            | Op::IntR { rd, .. }
            | Op::Addi { rd, .. }
            | Op::Slli { rd, .. }
            | Op::Li { rd, .. }
            | Op::Mv { rd, .. }
            | Op::La { rd, .. } => *rd,
            _ => return None,
        };
        (rd != XReg::ZERO).then_some(rd)
    }

    /// Every architectural register written, with vector groups expanded.
    pub fn defs(&self, lmul_regs: u32) -> Vec<Reg> {
        let mut out: Vec<Reg> = self.x_def().map(|r| Reg::X(r.0)).into_iter().collect();
        match &self.op {
            Op::FLoad { rd, .. } | Op::FArith { rd, .. } | Op::FMvFromX { rd, .. } => out.push(Reg::F(rd.0)),
            _ => {}
        }
        if let Some((first, span)) = self.vector_def(lmul_regs) {
            out.extend((first..first.saturating_add(span as u8)).map(Reg::V));
        }
        out
    }

    /// Every architectural register read, with vector groups expanded.
    pub fn uses(&self, lmul_regs: u32) -> Vec<Reg> {
        let mut out = Vec::new();
        let group = |out: &mut Vec<Reg>, first: u8, span: u32| {
            out.extend((first..first.saturating_add(span as u8)).map(Reg::V));
        };
        match &self.op {
            Op::Vsetvli { avl: Avl::Reg(r), .. } => out.push(Reg::X(r.0)),
            Op::VLoad { base, stride, .. } => {
                out.push(Reg::X(base.0));
                out.extend(stride.map(|s| Reg::X(s.0)));
            }
            Op::VStore { vs3, base, stride, .. } => {
                out.push(Reg::X(base.0));
                out.extend(stride.map(|s| Reg::X(s.0)));
                group(&mut out, vs3.0, lmul_regs);
            }
            Op::VLoadMask { base, .. } => out.push(Reg::X(base.0)),
            Op::VStoreMask { vs3, base } => {
                out.push(Reg::X(base.0));
                out.push(Reg::V(vs3.0));
            }
            Op::VArith { op, vd, vs1, vs2 } => {
                group(&mut out, vs1.0, lmul_regs);
                group(&mut out, vs2.0, lmul_regs);
                if op.accumulates() {
                    group(&mut out, vd.0, lmul_regs);
                }
            }
            Op::VMvX { rs1, .. } | Op::FMvFromX { rs1, .. } => out.push(Reg::X(rs1.0)),
            Op::Load { base, .. } | Op::FLoad { base, .. } => out.push(Reg::X(base.0)),
            Op::Store { rs2, base, .. } => {
                out.push(Reg::X(base.0));
                out.push(Reg::X(rs2.0));
            }
            Op::FStore { rs2, base, .. } => {
                out.push(Reg::X(base.0));
                out.push(Reg::F(rs2.0));
            }
            Op::FArith { rs1, rs2, rs3, .. } => {
                out.push(Reg::F(rs1.0));
                out.push(Reg::F(rs2.0));
                out.extend(rs3.map(|r| Reg::F(r.0)));
            }
            Op::IntR { rs1, rs2, .. } | Op::Branch { rs1, rs2, .. } => {
                out.push(Reg::X(rs1.0));
                out.push(Reg::X(rs2.0));
            }
            Op::Addi { rs1, .. } | Op::Slli { rs1, .. } | Op::Mv { rs: rs1, .. } => out.push(Reg::X(rs1.0)),
            _ => {}
        }
        if self.masked {
            out.push(Reg::V(0));
        }
        out.retain(|r| *r != Reg::X(0));
        out
    }
}

/// An architectural register of any file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Reg {
    X(u8),
    F(u8),
    V(u8),
}

/// A parsed translation unit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub instructions: Vec<Instruction>,
    /// Label name to the index of the instruction that follows it.
    pub labels: HashMap<String, usize>,
    /// Raw JSON of the first `# rvvprobe-meta:` comment, if any.
    pub metadata: Option<String>,
    pub arch: Option<String>,
}

const DIRECTIVES: &[&str] = &[
    ".text", ".globl", ".global", ".type", ".size", ".p2align", ".align", ".option", ".section",
];

struct Cursor<'a> {
    line: usize,
    /// Byte offset of `text` within the source line (0-based).
    base: usize,
    text: &'a str,
}

impl Cursor<'_> {
    fn err(&self, at: usize, message: impl Into<String>) -> AsmError {
        AsmError::Syntax {
            line: self.line,
            column: self.base + at + 1,
            message: message.into(),
        }
    }
}

/// Split `src` into comma-separated operands with their byte offsets.
fn split_operands(src: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    if src.trim().is_empty() {
        return out;
    }
    let mut start = 0;
    for (i, ch) in src.char_indices() {
        if ch == ',' {
            out.push((start, &src[start..i]));
            start = i + 1;
        }
    }
    out.push((start, &src[start..]));
    out.into_iter()
        .map(|(off, s)| {
            let lead = s.len() - s.trim_start().len();
            (off + lead, s.trim())
        })
        .collect()
}

pub fn parse_int(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let mag: u64 = if let Some(hex) = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")) {
        u64::from_str_radix(&hex.replace('_', ""), 16).ok()?
    } else if let Some(bin) = body.strip_prefix("0b") {
        u64::from_str_radix(bin, 2).ok()?
    } else {
        if body.is_empty() || !body.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        body.parse::<u64>().ok()?
    };
    Some(if neg {
        (mag as i64).wrapping_neg()
    } else {
        mag as i64
    })
}

fn is_label_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_' || c == '.')
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '$')
}

struct Operands<'a, 'c> {
    cur: &'c Cursor<'a>,
    items: Vec<(usize, &'a str)>,
    /// Offset of the operand list within the cursor text.
    off: usize,
}

impl<'a> Operands<'a, '_> {
    fn expect_count(&self, range: std::ops::RangeInclusive<usize>, what: &str) -> Result<(), AsmError> {
        if !range.contains(&self.items.len()) {
            return Err(self.cur.err(self.off, format!("expected {what}")));
        }
        Ok(())
    }

    fn raw(&self, i: usize) -> (usize, &'a str) {
        let (o, s) = self.items[i];
        (self.off + o, s)
    }

    fn x(&self, i: usize) -> Result<XReg, AsmError> {
        let (at, s) = self.raw(i);
        XReg::parse(s).ok_or_else(|| self.cur.err(at, format!("expected integer register, found `{s}`")))
    }

    fn f(&self, i: usize) -> Result<FReg, AsmError> {
        let (at, s) = self.raw(i);
        FReg::parse(s).ok_or_else(|| self.cur.err(at, format!("expected FP register, found `{s}`")))
    }

    fn v(&self, i: usize) -> Result<VReg, AsmError> {
        let (at, s) = self.raw(i);
        VReg::parse(s).ok_or_else(|| self.cur.err(at, format!("expected vector register, found `{s}`")))
    }

    fn imm(&self, i: usize) -> Result<i64, AsmError> {
        let (at, s) = self.raw(i);
        parse_int(s).ok_or_else(|| self.cur.err(at, format!("expected immediate, found `{s}`")))
    }

    fn label(&self, i: usize) -> Result<String, AsmError> {
        let (at, s) = self.raw(i);
        if is_label_name(s) {
            Ok(s.to_string())
        } else {
            Err(self.cur.err(at, format!("expected label, found `{s}`")))
        }
    }

    /// `off(reg)` or `(reg)`.
    fn mem(&self, i: usize) -> Result<(i64, XReg), AsmError> {
        let (at, s) = self.raw(i);
        let bad = || self.cur.err(at, format!("expected memory operand `offset(reg)`, found `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let offset = if s[..open].trim().is_empty() {
            0
        } else {
            parse_int(s[..open].trim()).ok_or_else(bad)?
        };
        let base = XReg::parse(inner.trim()).ok_or_else(bad)?;
        Ok((offset, base))
    }

    /// Trailing `v0.t` mask operand, consumed if present.
    fn take_mask(&mut self) -> bool {
        if self.items.last().is_some_and(|(_, s)| *s == "v0.t") {
            self.items.pop();
            true
        } else {
            false
        }
    }

    fn vtype(&self, from: usize) -> Result<VtypeImm, AsmError> {
        let mut sew = None;
        let mut lmul = None;
        let mut vta = Policy::Undisturbed;
        let mut vma = Policy::Undisturbed;
        for i in from..self.items.len() {
            let (at, s) = self.raw(i);
            match s {
                "ta" => vta = Policy::Agnostic,
                "tu" => vta = Policy::Undisturbed,
                "ma" => vma = Policy::Agnostic,
                "mu" => vma = Policy::Undisturbed,
                _ if s.starts_with('e') => {
                    let bits = s[1..]
                        .parse::<u32>()
                        .ok()
                        .and_then(|b| Sew::from_bits(b).ok())
                        .ok_or_else(|| self.cur.err(at, format!("bad element width `{s}`")))?;
                    sew = Some(bits);
                }
                _ if s.starts_with('m') => {
                    lmul = Some(
                        s.parse::<Lmul>()
                            .map_err(|_| self.cur.err(at, format!("bad LMUL `{s}`")))?,
                    );
                }
                _ => return Err(self.cur.err(at, format!("unexpected vtype field `{s}`"))),
            }
        }
        let sew = sew.ok_or_else(|| self.cur.err(self.off, "vtype is missing the element width"))?;
        Ok(VtypeImm {
            sew,
            lmul: lmul.unwrap_or(Lmul::M1),
            vta,
            vma,
        })
    }
}

fn parse_instruction(cur: &Cursor<'_>) -> Result<Instruction, AsmError> {
    let text = cur.text;
    let mn_end = text.find(char::is_whitespace).unwrap_or(text.len());
    let mnemonic = &text[..mn_end];
    let class = InstClass::lookup(mnemonic).map_err(|UnsupportedInstruction(m)| AsmError::Unsupported {
        line: cur.line,
        column: cur.base + 1,
        mnemonic: m,
    })?;
    let rest = &text[mn_end..];
    let mut ops = Operands {
        cur,
        items: split_operands(rest),
        off: mn_end,
    };
    if let Some((o, _)) = ops.items.iter().find(|(_, s)| s.is_empty()) {
        return Err(cur.err(mn_end + o, "empty operand"));
    }
    let masked = ops.take_mask();
    let m = mnemonic;
    let op = match m {
        "vsetvli" | "vsetivli" => {
            ops.expect_count(3..=6, "rd, avl, vtype")?;
            let rd = ops.x(0)?;
            let avl = if m == "vsetvli" {
                Avl::Reg(ops.x(1)?)
            } else {
                let (at, _) = ops.raw(1);
                let v = ops.imm(1)?;
                if !(0..32).contains(&v) {
                    return Err(cur.err(at, "vsetivli AVL must be in 0..=31"));
                }
                Avl::Imm(v as u64)
            };
            Op::Vsetvli {
                rd,
                avl,
                vtype: ops.vtype(2)?,
            }
        }
        "vlm.v" | "vsm.v" => {
            ops.expect_count(2..=2, "vd, (rs1)")?;
            let v = ops.v(0)?;
            let (off, base) = ops.mem(1)?;
            if off != 0 {
                return Err(cur.err(ops.raw(1).0, "vector memory operands take no offset"));
            }
            if m == "vlm.v" {
                Op::VLoadMask { vd: v, base }
            } else {
                Op::VStoreMask { vs3: v, base }
            }
        }
        _ if m.starts_with("vle") || m.starts_with("vse") || m.starts_with("vlse") || m.starts_with("vsse") => {
            let strided = m.starts_with("vlse") || m.starts_with("vsse");
            let eew = class.encoded_width().expect("vector memory mnemonic carries a width");
            if strided {
                ops.expect_count(3..=3, "vd, (rs1), rs2")?;
            } else {
                ops.expect_count(2..=2, "vd, (rs1)")?;
            }
            let v = ops.v(0)?;
            let (off, base) = ops.mem(1)?;
            if off != 0 {
                return Err(cur.err(ops.raw(1).0, "vector memory operands take no offset"));
            }
            let stride = if strided { Some(ops.x(2)?) } else { None };
            if m.starts_with("vl") {
                Op::VLoad { vd: v, base, stride, eew }
            } else {
                Op::VStore { vs3: v, base, stride, eew }
            }
        }
        "vadd.vv" | "vmul.vv" | "vdiv.vv" | "vfadd.vv" | "vfmul.vv" | "vfdiv.vv" => {
            ops.expect_count(3..=3, "vd, vs2, vs1")?;
            let op = match m {
                "vadd.vv" => VArithOp::Add,
                "vmul.vv" => VArithOp::Mul,
                "vdiv.vv" => VArithOp::Div,
                "vfadd.vv" => VArithOp::FAdd,
                "vfmul.vv" => VArithOp::FMul,
                _ => VArithOp::FDiv,
            };
            Op::VArith {
                op,
                vd: ops.v(0)?,
                vs2: ops.v(1)?,
                vs1: ops.v(2)?,
            }
        }
        "vmacc.vv" | "vfmacc.vv" => {
            ops.expect_count(3..=3, "vd, vs1, vs2")?;
            Op::VArith {
                op: if m == "vmacc.vv" { VArithOp::Macc } else { VArithOp::FMacc },
                vd: ops.v(0)?,
                vs1: ops.v(1)?,
                vs2: ops.v(2)?,
            }
        }
        "vmv.v.x" => {
            ops.expect_count(2..=2, "vd, rs1")?;
            Op::VMvX {
                vd: ops.v(0)?,
                rs1: ops.x(1)?,
            }
        }
        "vmv.v.i" => {
            ops.expect_count(2..=2, "vd, imm")?;
            let imm = ops.imm(1)?;
            if !(-16..16).contains(&imm) {
                return Err(cur.err(ops.raw(1).0, "vmv.v.i immediate must be in -16..=15"));
            }
            Op::VMvI { vd: ops.v(0)?, imm }
        }
        "lb" | "lbu" | "lh" | "lhu" | "lw" | "lwu" | "ld" => {
            ops.expect_count(2..=2, "rd, offset(rs1)")?;
            let (offset, base) = ops.mem(1)?;
            Op::Load {
                rd: ops.x(0)?,
                base,
                offset,
                width: class.encoded_width().expect("load width"),
                signed: !m.ends_with('u'),
            }
        }
        "sb" | "sh" | "sw" | "sd" => {
            ops.expect_count(2..=2, "rs2, offset(rs1)")?;
            let (offset, base) = ops.mem(1)?;
            Op::Store {
                rs2: ops.x(0)?,
                base,
                offset,
                width: class.encoded_width().expect("store width"),
            }
        }
        "flw" | "fld" => {
            ops.expect_count(2..=2, "rd, offset(rs1)")?;
            let (offset, base) = ops.mem(1)?;
            Op::FLoad {
                rd: ops.f(0)?,
                base,
                offset,
                width: class.encoded_width().expect("fp load width"),
            }
        }
        "fsw" | "fsd" => {
            ops.expect_count(2..=2, "rs2, offset(rs1)")?;
            let (offset, base) = ops.mem(1)?;
            Op::FStore {
                rs2: ops.f(0)?,
                base,
                offset,
                width: class.encoded_width().expect("fp store width"),
            }
        }
        "fadd.s" | "fadd.d" | "fmul.s" | "fmul.d" | "fdiv.s" | "fdiv.d" => {
            ops.expect_count(3..=3, "rd, rs1, rs2")?;
            let op = match &m[..4] {
                "fadd" => FArithOp::Add,
                "fmul" => FArithOp::Mul,
                _ => FArithOp::Div,
            };
            Op::FArith {
                op,
                width: class.encoded_width().expect("fp width"),
                rd: ops.f(0)?,
                rs1: ops.f(1)?,
                rs2: ops.f(2)?,
                rs3: None,
            }
        }
        "fmadd.s" | "fmadd.d" => {
            ops.expect_count(4..=4, "rd, rs1, rs2, rs3")?;
            Op::FArith {
                op: FArithOp::Madd,
                width: class.encoded_width().expect("fp width"),
                rd: ops.f(0)?,
                rs1: ops.f(1)?,
                rs2: ops.f(2)?,
                rs3: Some(ops.f(3)?),
            }
        }
        "fmv.w.x" | "fmv.d.x" => {
            ops.expect_count(2..=2, "rd, rs1")?;
            Op::FMvFromX {
                width: class.encoded_width().expect("fp width"),
                rd: ops.f(0)?,
                rs1: ops.x(1)?,
            }
        }
        "add" | "sub" | "mul" | "div" => {
            ops.expect_count(3..=3, "rd, rs1, rs2")?;
            let op = match m {
                "add" => IntOp::Add,
                "sub" => IntOp::Sub,
                "mul" => IntOp::Mul,
                _ => IntOp::Div,
            };
            Op::IntR {
                op,
                rd: ops.x(0)?,
                rs1: ops.x(1)?,
                rs2: ops.x(2)?,
            }
        }
        "addi" => {
            ops.expect_count(3..=3, "rd, rs1, imm")?;
            let imm = ops.imm(2)?;
            if !(-2048..2048).contains(&imm) {
                return Err(cur.err(ops.raw(2).0, "addi immediate must fit in 12 bits"));
            }
            Op::Addi {
                rd: ops.x(0)?,
                rs1: ops.x(1)?,
                imm,
            }
        }
        "slli" => {
            ops.expect_count(3..=3, "rd, rs1, shamt")?;
            let sh = ops.imm(2)?;
            if !(0..64).contains(&sh) {
                return Err(cur.err(ops.raw(2).0, "shift amount must be in 0..=63"));
            }
            Op::Slli {
                rd: ops.x(0)?,
                rs1: ops.x(1)?,
                shamt: sh as u32,
            }
        }
        "li" => {
            ops.expect_count(2..=2, "rd, imm")?;
            Op::Li {
                rd: ops.x(0)?,
                imm: ops.imm(1)?,
            }
        }
        "mv" => {
            ops.expect_count(2..=2, "rd, rs")?;
            Op::Mv {
                rd: ops.x(0)?,
                rs: ops.x(1)?,
            }
        }
        "la" => {
            ops.expect_count(2..=2, "rd, symbol")?;
            Op::La {
                rd: ops.x(0)?,
                symbol: ops.label(1)?,
            }
        }
        "beq" | "bne" | "blt" | "bge" | "bltu" | "bgeu" => {
            ops.expect_count(3..=3, "rs1, rs2, label")?;
            let cond = match m {
                "beq" => BranchCond::Eq,
                "bne" => BranchCond::Ne,
                "blt" => BranchCond::Lt,
                "bge" => BranchCond::Ge,
                "bltu" => BranchCond::Ltu,
                _ => BranchCond::Geu,
            };
            Op::Branch {
                cond,
                rs1: ops.x(0)?,
                rs2: ops.x(1)?,
                target: ops.label(2)?,
            }
        }
        "beqz" | "bnez" => {
            ops.expect_count(2..=2, "rs1, label")?;
            Op::Branch {
                cond: if m == "beqz" { BranchCond::Eq } else { BranchCond::Ne },
                rs1: ops.x(0)?,
                rs2: XReg::ZERO,
                target: ops.label(1)?,
            }
        }
        "ret" => {
            ops.expect_count(0..=0, "no operands")?;
            Op::Ret
        }
        _ => unreachable!("mnemonic `{m}` is in the taxonomy but has no operand grammar"),
    };
    if masked && !matches!(op, Op::VLoad { .. } | Op::VStore { .. } | Op::VArith { .. }) {
        return Err(cur.err(mn_end, format!("`{m}` cannot be masked")));
    }
    Ok(Instruction {
        class,
        op,
        masked,
        line: cur.line,
    })
}

/// Parse assembler source into a flat program.
pub fn parse_program(src: &str) -> Result<Program, AsmError> {
    let mut prog = Program::default();
    for (idx, raw_line) in src.lines().enumerate() {
        let line_no = idx + 1;
        let (code, comment) = match raw_line.find('#') {
            Some(p) => (&raw_line[..p], Some(&raw_line[p + 1..])),
            None => (raw_line, None),
        };
        if let Some(c) = comment {
            if let Some(meta) = c.trim().strip_prefix(META_PREFIX) {
                if prog.metadata.is_none() {
                    prog.metadata = Some(meta.trim().to_string());
                }
            }
        }
        let mut base = code.len() - code.trim_start().len();
        let mut text = code.trim();
        // Leading labels, possibly several on one line.
        while let Some(colon) = text.find(':') {
            let name = text[..colon].trim();
            if !is_label_name(name) || name.contains(char::is_whitespace) {
                break;
            }
            if prog.labels.insert(name.to_string(), prog.instructions.len()).is_some() {
                return Err(AsmError::Syntax {
                    line: line_no,
                    column: base + 1,
                    message: format!("duplicate label `{name}`"),
                });
            }
            let after = &text[colon + 1..];
            base += colon + 1 + (after.len() - after.trim_start().len());
            text = after.trim();
        }
        if text.is_empty() {
            continue;
        }
        let cur = Cursor {
            line: line_no,
            base,
            text,
        };
        if text.starts_with('.') {
            let name = text.split_whitespace().next().unwrap_or(text);
            if !DIRECTIVES.contains(&name) {
                return Err(cur.err(0, format!("unsupported directive `{name}`")));
            }
            if name == ".option" {
                let args: Vec<&str> = text[name.len()..].split(',').map(str::trim).collect();
                if args.first() == Some(&"arch") {
                    prog.arch = args.get(1).map(|s| s.to_string());
                }
            }
            continue;
        }
        prog.instructions.push(parse_instruction(&cur)?);
    }
    for ins in &prog.instructions {
        if let Some(t) = ins.branch_target() {
            if !prog.labels.contains_key(t) {
                return Err(AsmError::Syntax {
                    line: ins.line,
                    column: 1,
                    message: format!("undefined label `{t}`"),
                });
            }
        }
    }
    Ok(prog)
}
