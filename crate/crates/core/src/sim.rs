//! Functional RV64 + RVV simulator for the supported instruction subset.
//!
//! Execution starts at the first instruction with `ra` holding a sentinel
//! return address and stops when `ret` returns to it. Every retired
//! instruction is attributed to the seven events with the same rules the
//! reference model applies statically, so the two can be cross-checked.

use half::f16;
use thiserror::Error;

use crate::asm::{parse_program, AsmError, Avl, BranchCond, FArithOp, IntOp, Op, Program, VArithOp, XReg};
use crate::events::EventCounts;
use crate::inst::attribute_occurrence;
use crate::kernelgen::AssemblyModule;
use crate::scalar::{fp_binop, fp_fma, int_binop, int_macc, BinOp, FpLane, IntLane};
use crate::vtype::{compute_vlmax, Lmul, Policy, Sew, VectorConfig, VtypeState, NUM_VREGS};

/// Value of `ra` on entry; returning to it halts the machine.
pub const RETURN_SENTINEL: u64 = 0xdead_beef_0000_0000;
pub const BUFFER_BASE: u64 = 0x1000_0000;
pub const TEXT_BASE: u64 = 0x0001_0000;
pub const DEFAULT_STEP_LIMIT: u64 = 50_000_000;
const ELEN: u32 = 64;
const NAN_BOX: u64 = 0xffff_ffff_0000_0000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Parse(#[from] AsmError),
    #[error("line {line}: illegal instruction: {reason}")]
    IllegalInstruction { line: usize, reason: String },
    #[error("line {line}: access of {len} bytes at {addr:#x} is outside mapped memory")]
    Unmapped { line: usize, addr: u64, len: usize },
    #[error("step limit of {limit} instructions exceeded")]
    StepLimit { limit: u64 },
    #[error("execution fell off the end of the program")]
    FellThrough,
}

/// The single mapped data region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    base: u64,
    bytes: Vec<u8>,
}

impl Memory {
    pub fn new(base: u64, len: usize) -> Memory {
        Memory { base, bytes: vec![0; len] }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn bytes_mut(&mut self) -> &mut [u8] {
        &mut self.bytes
    }

    fn range(&self, addr: u64, len: usize, line: usize) -> Result<std::ops::Range<usize>, SimError> {
        let err = SimError::Unmapped { line, addr, len };
        let off = addr.checked_sub(self.base).ok_or(err.clone())?;
        let end = off.checked_add(len as u64).ok_or(err.clone())?;
        if end > self.bytes.len() as u64 {
            return Err(err);
        }
        Ok(off as usize..end as usize)
    }

    fn read(&self, addr: u64, len: usize, line: usize) -> Result<u64, SimError> {
        let r = self.range(addr, len, line)?;
        let mut buf = [0u8; 8];
        buf[..len].copy_from_slice(&self.bytes[r]);
        Ok(u64::from_le_bytes(buf))
    }

    fn write(&mut self, addr: u64, len: usize, value: u64, line: usize) -> Result<(), SimError> {
        let r = self.range(addr, len, line)?;
        self.bytes[r].copy_from_slice(&value.to_le_bytes()[..len]);
        Ok(())
    }
}

/// Architectural state.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineState {
    pub cfg: VectorConfig,
    pub x: [u64; 32],
    /// Raw 64-bit FP registers; single precision values are NaN-boxed.
    pub f: [u64; 32],
    v: Vec<u8>,
    /// `None` while `vill` is set.
    pub vtype: Option<VtypeState>,
    pub mem: Memory,
}

impl MachineState {
    pub fn new(cfg: VectorConfig, buffer_bytes: usize) -> MachineState {
        let mut x = [0u64; 32];
        x[XReg::RA.0 as usize] = RETURN_SENTINEL;
        x[XReg::A1.0 as usize] = BUFFER_BASE;
        MachineState {
            v: vec![0; cfg.vlen_bytes() * NUM_VREGS as usize],
            cfg,
            x,
            f: [0; 32],
            vtype: None,
            mem: Memory::new(BUFFER_BASE, buffer_bytes),
        }
    }

    pub fn vl(&self) -> u64 {
        self.vtype.map_or(0, |v| v.vl)
    }

    pub fn vreg(&self, r: u8) -> &[u8] {
        let n = self.cfg.vlen_bytes();
        &self.v[r as usize * n..(r as usize + 1) * n]
    }

    /// Bytes of a register group starting at `r`.
    pub fn vgroup(&self, r: u8, regs: u32) -> &[u8] {
        let n = self.cfg.vlen_bytes();
        &self.v[r as usize * n..(r as usize + regs as usize) * n]
    }

    /// Element `i` (of width `sew`) of the group at `r`, zero-extended.
    pub fn velem(&self, r: u8, sew: Sew, i: usize) -> u64 {
        let b = sew.bytes();
        let start = r as usize * self.cfg.vlen_bytes() + i * b;
        let mut buf = [0u8; 8];
        buf[..b].copy_from_slice(&self.v[start..start + b]);
        u64::from_le_bytes(buf)
    }

    fn set_velem(&mut self, r: u8, sew: Sew, i: usize, value: u64) {
        let b = sew.bytes();
        let start = r as usize * self.cfg.vlen_bytes() + i * b;
        self.v[start..start + b].copy_from_slice(&value.to_le_bytes()[..b]);
    }

    /// Mask bit `i` of `v0`.
    pub fn mask_bit(&self, i: usize) -> bool {
        self.v[i / 8] >> (i % 8) & 1 == 1
    }

    fn set_x(&mut self, r: XReg, value: u64) {
        if r != XReg::ZERO {
            self.x[r.0 as usize] = value;
        }
    }

    fn xr(&self, r: XReg) -> u64 {
        self.x[r.0 as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExecStats {
    pub counts: EventCounts,
    pub target_inst_count: u64,
    pub steps: u64,
}

/// Execute `program` from its first instruction until the sentinel return.
pub fn execute(
    program: &Program,
    state: &mut MachineState,
    target_inst: Option<&str>,
    step_limit: u64,
) -> Result<ExecStats, SimError> {
    let mut stats = ExecStats::default();
    let mut pc = 0usize;
    loop {
        let ins = program.instructions.get(pc).ok_or(SimError::FellThrough)?;
        if stats.steps >= step_limit {
            return Err(SimError::StepLimit { limit: step_limit });
        }
        stats.steps += 1;
        stats.counts += attribute_occurrence(&ins.effective_class());
        if target_inst == Some(ins.mnemonic()) {
            stats.target_inst_count += 1;
        }
        let line = ins.line;
        let illegal = |reason: &str| SimError::IllegalInstruction {
            line,
            reason: reason.to_string(),
        };
        let mut next = pc + 1;
        match &ins.op {
            Op::Vsetvli { rd, avl, vtype } => {
                let requested = match avl {
                    Avl::Imm(n) => Some(*n),
                    Avl::Reg(r) if *r != XReg::ZERO => Some(state.xr(*r)),
                    Avl::Reg(_) if *rd != XReg::ZERO => Some(u64::MAX),
                    Avl::Reg(_) => None,
                };
                let legal = vtype.sew.bits() as u64 * *vtype.lmul.ratio().denom() as u64
                    <= ELEN as u64 * *vtype.lmul.ratio().numer() as u64;
                let vlmax = compute_vlmax(&state.cfg, vtype.sew, vtype.lmul).ok().filter(|_| legal);
                match vlmax {
                    Some(vlmax) => {
                        let vl = match requested {
                            Some(a) => a.min(vlmax),
                            None => state.vl().min(vlmax),
                        };
                        state.vtype = Some(VtypeState {
                            sew: vtype.sew,
                            lmul: vtype.lmul,
                            vta: vtype.vta,
                            vma: vtype.vma,
                            vl,
                        });
                        state.set_x(*rd, vl);
                    }
                    None => {
                        state.vtype = None;
                        state.set_x(*rd, 0);
                    }
                }
            }
            Op::VLoad { vd, base, stride, eew } => {
                let vt = vector_ready(state, *eew, line)?;
                check_group(vd.0, vt.lmul, ins.masked, line)?;
                let step = match stride {
                    Some(r) => state.xr(*r),
                    None => eew.bytes() as u64,
                };
                let addr0 = state.xr(*base);
                let mut values = Vec::with_capacity(vt.vl as usize);
                for i in 0..vt.vl as usize {
                    if element_active(state, ins.masked, i) {
                        let addr = addr0.wrapping_add(step.wrapping_mul(i as u64));
                        values.push(Some(state.mem.read(addr, eew.bytes(), line)?));
                    } else {
                        values.push(None);
                    }
                }
                write_group(state, vd.0, vt, values.into_iter());
            }
            Op::VStore { vs3, base, stride, eew } => {
                let vt = vector_ready(state, *eew, line)?;
                check_group(vs3.0, vt.lmul, false, line)?;
                let step = match stride {
                    Some(r) => state.xr(*r),
                    None => eew.bytes() as u64,
                };
                let addr0 = state.xr(*base);
                for i in 0..vt.vl as usize {
                    if element_active(state, ins.masked, i) {
                        let addr = addr0.wrapping_add(step.wrapping_mul(i as u64));
                        let value = state.velem(vs3.0, *eew, i);
                        state.mem.write(addr, eew.bytes(), value, line)?;
                    }
                }
            }
            Op::VLoadMask { vd, base } => {
                let vt = state.vtype.ok_or_else(|| illegal("vector instruction with vill set"))?;
                let evl = vt.vl.div_ceil(8) as usize;
                if evl > 0 {
                    let addr = state.xr(*base);
                    let mut bytes = Vec::with_capacity(evl);
                    for k in 0..evl {
                        bytes.push(state.mem.read(addr + k as u64, 1, line)? as u8);
                    }
                    let n = state.cfg.vlen_bytes();
                    let reg = &mut state.v[vd.0 as usize * n..(vd.0 as usize + 1) * n];
                    reg[..evl].copy_from_slice(&bytes);
                    // Mask loads are always tail-agnostic.
                    reg[evl..].fill(0xff);
                }
            }
            Op::VStoreMask { vs3, base } => {
                let vt = state.vtype.ok_or_else(|| illegal("vector instruction with vill set"))?;
                let evl = vt.vl.div_ceil(8) as usize;
                let addr = state.xr(*base);
                for k in 0..evl {
                    let b = state.vreg(vs3.0)[k];
                    state.mem.write(addr + k as u64, 1, b as u64, line)?;
                }
            }
            Op::VArith { op, vd, vs1, vs2 } => {
                let vt = state.vtype.ok_or_else(|| illegal("vector instruction with vill set"))?;
                for r in [vd.0, vs1.0, vs2.0] {
                    check_group(r, vt.lmul, false, line)?;
                }
                if ins.masked && vd.0 == 0 {
                    return Err(illegal("masked destination overlaps v0"));
                }
                if op.is_fp() && vt.sew == Sew::E8 {
                    return Err(illegal("floating-point arithmetic at SEW=8"));
                }
                let values: Vec<Option<u64>> = (0..vt.vl as usize)
                    .map(|i| {
                        element_active(state, ins.masked, i).then(|| {
                            let a = state.velem(vs2.0, vt.sew, i);
                            let b = state.velem(vs1.0, vt.sew, i);
                            let d = state.velem(vd.0, vt.sew, i);
                            vector_lane(*op, vt.sew, a, b, d)
                        })
                    })
                    .collect();
                write_group(state, vd.0, vt, values.into_iter());
            }
            Op::VMvX { vd, rs1 } => {
                let vt = state.vtype.ok_or_else(|| illegal("vector instruction with vill set"))?;
                check_group(vd.0, vt.lmul, false, line)?;
                let x = state.xr(*rs1);
                write_group(state, vd.0, vt, (0..vt.vl).map(|_| Some(x)));
            }
            Op::VMvI { vd, imm } => {
                let vt = state.vtype.ok_or_else(|| illegal("vector instruction with vill set"))?;
                check_group(vd.0, vt.lmul, false, line)?;
                let x = *imm as u64;
                write_group(state, vd.0, vt, (0..vt.vl).map(|_| Some(x)));
            }
            Op::Load { rd, base, offset, width, signed } => {
                let addr = state.xr(*base).wrapping_add(*offset as u64);
                let raw = state.mem.read(addr, width.bytes(), line)?;
                let value = if *signed { sign_extend(raw, width.bits()) } else { raw };
                state.set_x(*rd, value);
            }
            Op::Store { rs2, base, offset, width } => {
                let addr = state.xr(*base).wrapping_add(*offset as u64);
                state.mem.write(addr, width.bytes(), state.xr(*rs2), line)?;
            }
            Op::FLoad { rd, base, offset, width } => {
                let addr = state.xr(*base).wrapping_add(*offset as u64);
                let raw = state.mem.read(addr, width.bytes(), line)?;
                state.f[rd.0 as usize] = if *width == Sew::E32 { NAN_BOX | raw } else { raw };
            }
            Op::FStore { rs2, base, offset, width } => {
                let addr = state.xr(*base).wrapping_add(*offset as u64);
                state.mem.write(addr, width.bytes(), state.f[rs2.0 as usize], line)?;
            }
            Op::FArith { op, width, rd, rs1, rs2, rs3 } => {
                let get = |r: u8| state.f[r as usize];
                let c = rs3.map(|r| get(r.0)).unwrap_or(0);
                let result = if *width == Sew::E32 {
                    let unbox = |bits: u64| {
                        if bits & NAN_BOX == NAN_BOX {
                            f32::from_bits(bits as u32)
                        } else {
                            f32::NAN
                        }
                    };
                    let r = scalar_fp(*op, unbox(get(rs1.0)), unbox(get(rs2.0)), unbox(c));
                    NAN_BOX | r.to_bits() as u64
                } else {
                    let r = scalar_fp(*op, f64::from_bits(get(rs1.0)), f64::from_bits(get(rs2.0)), f64::from_bits(c));
                    r.to_bits()
                };
                state.f[rd.0 as usize] = result;
            }
            Op::FMvFromX { width, rd, rs1 } => {
                let x = state.xr(*rs1);
                state.f[rd.0 as usize] = if *width == Sew::E32 { NAN_BOX | (x & 0xffff_ffff) } else { x };
            }
            Op::IntR { op, rd, rs1, rs2 } => {
                let a = state.xr(*rs1) as i64;
                let b = state.xr(*rs2) as i64;
                let bin = match op {
                    IntOp::Add => BinOp::Add,
                    IntOp::Sub => BinOp::Sub,
                    IntOp::Mul => BinOp::Mul,
                    IntOp::Div => BinOp::Div,
                };
                state.set_x(*rd, int_binop(bin, a, b) as u64);
            }
            Op::Addi { rd, rs1, imm } => {
                let v = state.xr(*rs1).wrapping_add(*imm as u64);
                state.set_x(*rd, v);
            }
            Op::Slli { rd, rs1, shamt } => {
                let v = state.xr(*rs1) << shamt;
                state.set_x(*rd, v);
            }
            Op::Li { rd, imm } => state.set_x(*rd, *imm as u64),
            Op::Mv { rd, rs } => {
                let v = state.xr(*rs);
                state.set_x(*rd, v);
            }
            Op::La { rd, symbol } => {
                let idx = *program
                    .labels
                    .get(symbol)
                    .ok_or_else(|| illegal(&format!("`la` of unknown symbol `{symbol}`")))?;
                state.set_x(*rd, TEXT_BASE + 4 * idx as u64);
            }
            Op::Branch { cond, rs1, rs2, target } => {
                let a = state.xr(*rs1);
                let b = state.xr(*rs2);
                let taken = match cond {
                    BranchCond::Eq => a == b,
                    BranchCond::Ne => a != b,
                    BranchCond::Lt => (a as i64) < (b as i64),
                    BranchCond::Ge => (a as i64) >= (b as i64),
                    BranchCond::Ltu => a < b,
                    BranchCond::Geu => a >= b,
                };
                if taken {
                    next = program.labels[target];
                }
            }
            Op::Ret => {
                if state.x[XReg::RA.0 as usize] == RETURN_SENTINEL {
                    return Ok(stats);
                }
                return Err(illegal("return to an address other than the caller"));
            }
        }
        pc = next;
    }
}

fn sign_extend(raw: u64, bits: u32) -> u64 {
    let shift = 64 - bits;
    (((raw << shift) as i64) >> shift) as u64
}

fn vector_ready(state: &MachineState, eew: Sew, line: usize) -> Result<VtypeState, SimError> {
    let vt = state.vtype.ok_or_else(|| SimError::IllegalInstruction {
        line,
        reason: "vector instruction with vill set".into(),
    })?;
    if vt.sew != eew {
        return Err(SimError::IllegalInstruction {
            line,
            reason: format!("EEW {eew} differs from SEW {}; widening memory accesses are not modelled", vt.sew),
        });
    }
    Ok(vt)
}

fn check_group(first: u8, lmul: Lmul, masked: bool, line: usize) -> Result<(), SimError> {
    let regs = lmul.group_regs() as u8;
    if !first.is_multiple_of(regs) {
        return Err(SimError::IllegalInstruction {
            line,
            reason: format!("v{first} is not aligned to a group of {regs} registers"),
        });
    }
    if masked && first == 0 {
        return Err(SimError::IllegalInstruction {
            line,
            reason: "masked destination overlaps v0".into(),
        });
    }
    Ok(())
}

fn element_active(state: &MachineState, masked: bool, i: usize) -> bool {
    !masked || state.mask_bit(i)
}

/// Write body elements (`None` marks an inactive element) and apply the
/// tail policy to the rest of the group. Agnostic elements become all ones.
fn write_group(state: &mut MachineState, vd: u8, vt: VtypeState, body: impl Iterator<Item = Option<u64>>) {
    if vt.vl == 0 {
        return;
    }
    let mut written = 0usize;
    for (i, v) in body.enumerate() {
        match v {
            Some(v) => state.set_velem(vd, vt.sew, i, v),
            None if vt.vma == Policy::Agnostic => state.set_velem(vd, vt.sew, i, u64::MAX),
            None => {}
        }
        written = i + 1;
    }
    if vt.vta == Policy::Agnostic {
        let group_bytes = vt.lmul.group_regs() as usize * state.cfg.vlen_bytes();
        for i in written..group_bytes / vt.sew.bytes() {
            state.set_velem(vd, vt.sew, i, u64::MAX);
        }
    }
}

fn int_lane<T: IntLane>(op: VArithOp, a: u64, b: u64, d: u64) -> u64 {
    let (a, b, d) = (T::from_bits(a), T::from_bits(b), T::from_bits(d));
    let r = match op {
        VArithOp::Add => int_binop(BinOp::Add, a, b),
        VArithOp::Mul => int_binop(BinOp::Mul, a, b),
        VArithOp::Div => int_binop(BinOp::Div, a, b),
        // vs1 * vs2 + vd; multiplication commutes so operand order is moot.
        VArithOp::Macc => int_macc(d, a, b),
        _ => unreachable!("floating-point op on integer lane"),
    };
    r.to_bits()
}

fn fp_lane<T: FpLane>(op: VArithOp, a: u64, b: u64, d: u64) -> u64 {
    let (a, b, d) = (T::from_bits(a), T::from_bits(b), T::from_bits(d));
    let r = match op {
        VArithOp::FAdd => fp_binop(BinOp::Add, a, b),
        VArithOp::FMul => fp_binop(BinOp::Mul, a, b),
        VArithOp::FDiv => fp_binop(BinOp::Div, a, b),
        VArithOp::FMacc => fp_fma(b, a, d),
        _ => unreachable!("integer op on floating-point lane"),
    };
    r.to_bits()
}

/// One lane of `.vv` arithmetic: `a` is from `vs2`, `b` from `vs1`, `d` from `vd`.
fn vector_lane(op: VArithOp, sew: Sew, a: u64, b: u64, d: u64) -> u64 {
    match (op.is_fp(), sew) {
        (false, Sew::E8) => int_lane::<i8>(op, a, b, d),
        (false, Sew::E16) => int_lane::<i16>(op, a, b, d),
        (false, Sew::E32) => int_lane::<i32>(op, a, b, d),
        (false, Sew::E64) => int_lane::<i64>(op, a, b, d),
        (true, Sew::E16) => fp_lane::<f16>(op, a, b, d),
        (true, Sew::E32) => fp_lane::<f32>(op, a, b, d),
        (true, _) => fp_lane::<f64>(op, a, b, d),
    }
}

fn scalar_fp<T: FpLane>(op: FArithOp, a: T, b: T, c: T) -> T {
    match op {
        FArithOp::Add => fp_binop(BinOp::Add, a, b),
        FArithOp::Mul => fp_binop(BinOp::Mul, a, b),
        FArithOp::Div => fp_binop(BinOp::Div, a, b),
        FArithOp::Madd => fp_fma(a, b, c),
    }
}

/// Result of simulating a generated kernel.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub stats: ExecStats,
    pub state: MachineState,
}

/// Parse and run kernel text with `a0 = iterations` on a zeroed buffer.
pub fn run_kernel_text(
    text: &str,
    cfg: &VectorConfig,
    buffer_bytes: usize,
    iterations: u64,
    target_inst: Option<&str>,
    init: impl FnOnce(&mut [u8]),
) -> Result<SimRun, SimError> {
    let program = parse_program(text)?;
    let mut state = MachineState::new(*cfg, buffer_bytes);
    state.x[XReg::A0.0 as usize] = iterations;
    init(state.mem.bytes_mut());
    let stats = execute(&program, &mut state, target_inst, DEFAULT_STEP_LIMIT)?;
    Ok(SimRun { stats, state })
}

/// Run a generated module with the buffer size recorded in its metadata.
pub fn run_module(module: &AssemblyModule, cfg: &VectorConfig, iterations: u64) -> Result<SimRun, SimError> {
    run_kernel_text(
        &module.text,
        cfg,
        module.buffer_bytes,
        iterations,
        Some(&module.metadata.spec.target_inst),
        |_| {},
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> VectorConfig {
        VectorConfig::new(128).unwrap()
    }

    fn run(body: &str) -> Result<SimRun, SimError> {
        let text = format!("k:\n{body}\nl:\n\taddi a0, a0, -1\n\tbnez a0, l\n\tret\n");
        run_kernel_text(&text, &cfg(), 256, 1, None, |b| {
            for (i, x) in b.iter_mut().enumerate() {
                *x = i as u8;
            }
        })
    }

    #[test]
    fn vsetvli_clamps_to_vlmax() {
        let r = run("\tli a4, 100\n\tvsetvli a3, a4, e32, m2, ta, ma").unwrap();
        assert_eq!(r.state.x[13], 8);
        let r = run("\tvsetvli a3, zero, e8, mf8, ta, ma").unwrap();
        assert_eq!(r.state.x[13], 2);
        let r = run("\tvsetvli a3, zero, e16, mf8, ta, ma").unwrap();
        assert_eq!(r.state.vtype, None);
    }

    #[test]
    fn unit_and_strided_loads() {
        let r = run("\tvsetvli a3, zero, e8, m1, ta, ma\n\tvle8.v v1, (a1)\n\tli a5, 3\n\tvlse8.v v2, (a1), a5").unwrap();
        assert_eq!(r.state.vreg(1), (0u8..16).collect::<Vec<_>>().as_slice());
        assert_eq!(r.state.vreg(2), (0u8..16).map(|i| i * 3).collect::<Vec<_>>().as_slice());
    }

    #[test]
    fn tail_and_mask_policies() {
        let r = run(
            "\tli a4, 4\n\tvsetvli a3, a4, e8, m1, tu, mu\n\tli a6, 7\n\tvmv.v.x v3, a6\n\tvsetvli a3, a4, e8, m1, ta, ma\n\tvmv.v.x v4, a6",
        )
        .unwrap();
        assert_eq!(&r.state.vreg(3)[..6], &[7, 7, 7, 7, 0, 0]);
        assert_eq!(&r.state.vreg(4)[..6], &[7, 7, 7, 7, 0xff, 0xff]);

        let r = run("\tli a6, 0x05\n\tvsetvli a3, zero, e8, m1, ta, mu\n\tvmv.v.x v0, a6\n\tvle8.v v1, (a1), v0.t").unwrap();
        assert_eq!(&r.state.vreg(1)[..4], &[0, 0, 2, 0]);
        let r = run("\tli a6, 0x05\n\tvsetvli a3, zero, e8, m1, ta, ma\n\tvmv.v.x v0, a6\n\tvle8.v v1, (a1), v0.t").unwrap();
        assert_eq!(&r.state.vreg(1)[..4], &[0, 0xff, 2, 0xff]);
    }

    #[test]
    fn illegal_and_unmapped() {
        let e = run("\tvsetvli a3, zero, e32, m2, ta, ma\n\tvle32.v v3, (a1)").unwrap_err();
        assert!(matches!(e, SimError::IllegalInstruction { .. }), "{e}");
        let e = run("\tvsetvli a3, zero, e32, m1, ta, ma\n\tvle32.v v0, (a1), v0.t").unwrap_err();
        assert!(matches!(e, SimError::IllegalInstruction { .. }), "{e}");
        let e = run("\tvle32.v v1, (a1)").unwrap_err();
        assert!(matches!(e, SimError::IllegalInstruction { .. }), "{e}");
        let e = run("\tlw t0, 256(a1)").unwrap_err();
        assert!(matches!(e, SimError::Unmapped { addr, .. } if addr == BUFFER_BASE + 256), "{e}");
        let spin = "k:\nl:\n\taddi a0, a0, -1\n\tbnez a0, l\n\tret\n";
        let program = parse_program(spin).unwrap();
        let mut st = MachineState::new(cfg(), 16);
        st.x[10] = 1000;
        assert_eq!(execute(&program, &mut st, None, 100), Err(SimError::StepLimit { limit: 100 }));
    }

    #[test]
    fn vector_arithmetic() {
        let r = run(
            "\tvsetvli a3, zero, e32, m1, ta, ma\n\tli a6, 0x40000000\n\tvmv.v.x v1, a6\n\tli a6, 0x3f800000\n\tvmv.v.x v2, a6\n\tvfdiv.vv v3, v1, v2\n\tvfmacc.vv v1, v2, v3",
        )
        .unwrap();
        assert_eq!(r.state.velem(3, Sew::E32, 0), 2.0f32.to_bits() as u64);
        assert_eq!(r.state.velem(1, Sew::E32, 3), 4.0f32.to_bits() as u64);
        let r = run("\tvsetvli a3, zero, e8, m1, ta, ma\n\tvmv.v.i v1, -128\n\tvmv.v.i v2, -1\n\tvdiv.vv v3, v1, v2\n\tvmv.v.i v4, 0\n\tvdiv.vv v5, v1, v4");
        // -128 does not fit a 5-bit immediate.
        assert!(r.is_err());
        let r = run("\tvsetvli a3, zero, e8, m1, ta, ma\n\tli a6, -128\n\tvmv.v.x v1, a6\n\tvmv.v.i v2, -1\n\tvdiv.vv v3, v1, v2\n\tvmv.v.i v4, 0\n\tvdiv.vv v5, v1, v4")
            .unwrap();
        assert_eq!(r.state.vreg(3)[0], 0x80);
        assert_eq!(r.state.vreg(5)[0], 0xff);
    }

    #[test]
    fn scalar_fp_is_nan_boxed() {
        let r = run("\tli a6, 0x3f800000\n\tfmv.w.x ft0, a6\n\tfadd.s ft1, ft0, ft0\n\tfsw ft1, 0(a1)\n\tflw ft2, 0(a1)").unwrap();
        assert_eq!(r.state.f[1], NAN_BOX | 2.0f32.to_bits() as u64);
        assert_eq!(r.state.f[2], r.state.f[1]);
        assert_eq!(&r.state.mem.bytes()[..4], &2.0f32.to_le_bytes());
    }

    #[test]
    fn mask_load_reads_ceil_vl_over_8_bytes() {
        let r = run("\tli a4, 9\n\tvsetvli a3, a4, e8, m1, ta, ma\n\tvlm.v v0, (a1)").unwrap();
        assert_eq!(&r.state.vreg(0)[..3], &[0, 1, 0xff]);
    }
}
