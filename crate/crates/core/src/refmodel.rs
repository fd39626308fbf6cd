//! Static reference model: expected event counts from kernel text alone.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asm::{parse_program, AsmError, Avl, Instruction, Op, Program, VtypeImm, XReg};
use crate::events::EventCounts;
use crate::inst::attribute_occurrence;
use crate::kernelgen::KernelMetadata;
use crate::vtype::{compute_vlmax, resolve_vl, VectorConfig, VtypeError, VtypeState};

/// AVL in force at loop entry, as far as constant propagation can tell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryAvl {
    /// `vsetvli rd, zero, ...` with `rd != zero`.
    Max,
    Const(u64),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntryVtype {
    pub vtype: VtypeImm,
    pub avl: EntryAvl,
}

impl EntryVtype {
    /// Concrete vtype for a machine; `None` when the AVL is not static.
    pub fn resolve(&self, cfg: &VectorConfig) -> Result<Option<VtypeState>, VtypeError> {
        let vlmax = compute_vlmax(cfg, self.vtype.sew, self.vtype.lmul)?;
        let vl = match self.avl {
            EntryAvl::Max => vlmax,
            EntryAvl::Const(a) => resolve_vl(a, vlmax),
            EntryAvl::Unknown => return Ok(None),
        };
        VtypeState::new(cfg, self.vtype.sew, self.vtype.lmul, self.vtype.vta, self.vtype.vma, vl).map(Some)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedKernel {
    pub program: Program,
    pub prologue: Range<usize>,
    pub loop_body: Range<usize>,
    pub epilogue: Range<usize>,
    pub trip_register: XReg,
    pub vtype_at_loop_entry: Option<EntryVtype>,
    pub metadata: Option<KernelMetadata>,
    /// Mnemonic whose occurrences define `target_inst_count`.
    pub target_inst: String,
}

impl ParsedKernel {
    pub fn body(&self) -> &[Instruction] {
        &self.program.instructions[self.loop_body.clone()]
    }

    fn sum(&self, range: Range<usize>) -> EventCounts {
        let mut c = EventCounts::default();
        for ins in &self.program.instructions[range] {
            c += attribute_occurrence(&ins.effective_class());
        }
        c
    }

    pub fn prologue_counts(&self) -> EventCounts {
        self.sum(self.prologue.clone())
    }

    pub fn body_counts(&self) -> EventCounts {
        self.sum(self.loop_body.clone())
    }

    pub fn epilogue_counts(&self) -> EventCounts {
        self.sum(self.epilogue.clone())
    }

    pub fn target_per_iteration(&self) -> u64 {
        self.body().iter().filter(|i| i.mnemonic() == self.target_inst).count() as u64
    }

    /// Smallest cyclic distance (in target instructions) from a target
    /// instruction to a later one that reads a register it wrote. `None`
    /// means no target instruction ever consumes another's result.
    pub fn min_dependency_distance(&self) -> Option<usize> {
        let lmul = self
            .vtype_at_loop_entry
            .map(|v| v.vtype.lmul.group_regs())
            .unwrap_or(1);
        let targets: Vec<&Instruction> = self.body().iter().filter(|i| i.mnemonic() == self.target_inst).collect();
        let n = targets.len();
        let mut best: Option<usize> = None;
        for (i, producer) in targets.iter().enumerate() {
            let defs = producer.defs(lmul);
            if defs.is_empty() {
                continue;
            }
            for d in 1..=n {
                let consumer = targets[(i + d) % n];
                let uses = consumer.uses(lmul);
                if defs.iter().any(|r| uses.contains(r)) {
                    best = Some(best.map_or(d, |b| b.min(d)));
                    break;
                }
                // A later redefinition hides the earlier value.
                if d < n && consumer.defs(lmul).iter().any(|r| defs.contains(r)) {
                    break;
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceCounts {
    pub counts: EventCounts,
    pub target_inst: String,
    pub target_inst_count: u64,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefModelError {
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("predicted counts overflow 64 bits")]
    Overflow,
}

/// Parse kernel text and recover its prologue / loop / epilogue structure.
pub fn parse_kernel(text: &str) -> Result<ParsedKernel, AsmError> {
    let program = parse_program(text)?;
    let metadata = match &program.metadata {
        Some(raw) => Some(
            serde_json::from_str::<KernelMetadata>(raw).map_err(|e| AsmError::Metadata(e.to_string()))?,
        ),
        None => None,
    };
    let ins = &program.instructions;
    let branches: Vec<usize> = (0..ins.len()).filter(|&i| ins[i].branch_target().is_some()).collect();
    let b = match branches.as_slice() {
        [] => return Err(AsmError::NoLoop),
        [b] => *b,
        _ => return Err(AsmError::ControlFlow(format!("{} branches; expected a single loop back-edge", branches.len()))),
    };
    let target = ins[b].branch_target().expect("branch");
    let head = program.labels[target];
    if head > b {
        return Err(AsmError::ControlFlow(format!("line {}: forward branch", ins[b].line)));
    }
    if head == b {
        return Err(AsmError::ControlFlow(format!("line {}: empty loop", ins[b].line)));
    }
    let rets: Vec<usize> = (0..ins.len()).filter(|&i| matches!(ins[i].op, Op::Ret)).collect();
    if rets.len() != 1 || rets[0] != ins.len() - 1 || rets[0] < b {
        return Err(AsmError::ControlFlow("kernel must end with exactly one `ret` after the loop".into()));
    }
    let trip = match &ins[b].op {
        Op::Branch { cond: crate::asm::BranchCond::Ne, rs1, rs2, .. } if *rs2 == XReg::ZERO && *rs1 != XReg::ZERO => *rs1,
        Op::Branch { cond: crate::asm::BranchCond::Ne, rs1, rs2, .. } if *rs1 == XReg::ZERO && *rs2 != XReg::ZERO => *rs2,
        _ => {
            return Err(AsmError::ControlFlow(format!(
                "line {}: loop back-edge must test a counter against zero",
                ins[b].line
            )))
        }
    };
    if trip != XReg::A0 {
        return Err(AsmError::ControlFlow(format!("loop counter is {trip}, expected a0")));
    }
    let writes_trip = |range: Range<usize>| ins[range].iter().filter(|i| i.x_def() == Some(trip)).collect::<Vec<_>>();
    if !writes_trip(0..head).is_empty() {
        return Err(AsmError::ControlFlow("prologue overwrites the iteration count".into()));
    }
    let loop_writes = writes_trip(head..b);
    let decrement = matches!(
        loop_writes.as_slice(),
        [Instruction { op: Op::Addi { rd, rs1, imm: -1 }, .. }] if *rd == trip && *rs1 == trip
    );
    if !decrement {
        return Err(AsmError::ControlFlow("loop must decrement the counter by one exactly once".into()));
    }

    let vtype_at_loop_entry = propagate_vtype(&ins[..head]);
    let target_inst = match &metadata {
        Some(m) => m.spec.target_inst.clone(),
        None => most_frequent(&ins[head..b]),
    };
    Ok(ParsedKernel {
        prologue: 0..head,
        loop_body: head..b + 1,
        epilogue: b + 1..ins.len(),
        trip_register: trip,
        vtype_at_loop_entry,
        metadata,
        target_inst,
        program,
    })
}

fn most_frequent(body: &[Instruction]) -> String {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for i in body {
        *freq.entry(i.mnemonic()).or_default() += 1;
    }
    let mut v: Vec<_> = freq.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    v.first().map(|(m, _)| m.to_string()).unwrap_or_default()
}

/// Straight-line constant propagation over the prologue.
fn propagate_vtype(prologue: &[Instruction]) -> Option<EntryVtype> {
    let mut consts: HashMap<u8, u64> = HashMap::new();
    consts.insert(0, 0);
    let mut state: Option<EntryVtype> = None;
    for i in prologue {
        let get = |r: &XReg, consts: &HashMap<u8, u64>| consts.get(&r.0).copied();
        let value = match &i.op {
            Op::Li { imm, .. } => Some(*imm as u64),
            Op::Addi { rs1, imm, .. } => get(rs1, &consts).map(|v| v.wrapping_add(*imm as u64)),
            Op::Mv { rs, .. } => get(rs, &consts),
            Op::Slli { rs1, shamt, .. } => get(rs1, &consts).map(|v| v << shamt),
            Op::IntR { op, rs1, rs2, .. } => match (get(rs1, &consts), get(rs2, &consts), op) {
                (Some(a), Some(b), crate::asm::IntOp::Add) => Some(a.wrapping_add(b)),
                (Some(a), Some(b), crate::asm::IntOp::Sub) => Some(a.wrapping_sub(b)),
                (Some(a), Some(b), crate::asm::IntOp::Mul) => Some(a.wrapping_mul(b)),
                _ => None,
            },
            _ => None,
        };
        if let Op::Vsetvli { rd, avl, vtype } = &i.op {
            let avl = match avl {
                Avl::Imm(n) => EntryAvl::Const(*n),
                Avl::Reg(r) if *r == XReg::ZERO && *rd != XReg::ZERO => EntryAvl::Max,
                // `vsetvli zero, zero` keeps vl; it is only legal when the ratio is unchanged.
                Avl::Reg(r) if *r == XReg::ZERO => state.map(|s| s.avl).unwrap_or(EntryAvl::Unknown),
                Avl::Reg(r) => consts.get(&r.0).map(|v| EntryAvl::Const(*v)).unwrap_or(EntryAvl::Unknown),
            };
            state = Some(EntryVtype { vtype: *vtype, avl });
        }
        if let Some(rd) = i.x_def() {
            match value {
                Some(v) => consts.insert(rd.0, v),
                None => consts.remove(&rd.0),
            };
        }
    }
    state
}

/// Expected counts for `iterations` executions of the loop.
pub fn predict_counts(kernel: &ParsedKernel, iterations: u64) -> Result<ReferenceCounts, RefModelError> {
    if iterations == 0 {
        return Err(RefModelError::ZeroIterations);
    }
    let body = kernel.body_counts().checked_scaled(iterations).ok_or(RefModelError::Overflow)?;
    let mut counts = kernel.prologue_counts();
    for (e, v) in body.iter().chain(kernel.epilogue_counts().iter()) {
        counts[e] = counts[e].checked_add(v).ok_or(RefModelError::Overflow)?;
    }
    let target_inst_count = kernel
        .target_per_iteration()
        .checked_mul(iterations)
        .ok_or(RefModelError::Overflow)?;
    Ok(ReferenceCounts {
        counts,
        target_inst: kernel.target_inst.clone(),
        target_inst_count,
        iterations,
    })
}
