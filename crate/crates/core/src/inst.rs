//! Instruction taxonomy of the supported assembly subset and the rules that
//! attribute each retired instruction to the seven events.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::EventCounts;
use crate::vtype::Sew;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstCategory {
    VectorLoad,
    VectorStore,
    VectorArith,
    VectorConfig,
    ScalarFpLoad,
    ScalarFpStore,
    ScalarFpArith,
    ScalarInt,
    Control,
}

impl InstCategory {
    pub fn is_vector(self) -> bool {
        matches!(
            self,
            InstCategory::VectorLoad
                | InstCategory::VectorStore
                | InstCategory::VectorArith
                | InstCategory::VectorConfig
        )
    }

    pub fn is_scalar(self) -> bool {
        !self.is_vector()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementType {
    Int,
    Fp,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Addressing {
    UnitStride,
    Strided,
    MaskedUnitStride,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported instruction `{0}`")]
pub struct UnsupportedInstruction(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InstClass {
    pub mnemonic: &'static str,
    pub category: InstCategory,
    pub element_type: ElementType,
    pub addressing: Addressing,
    /// Machine instructions retired per occurrence. Every pseudo-instruction
    /// counts as one except `la` (auipc + addi).
    pub weight: u32,
}

use Addressing as A;
use ElementType as T;
use InstCategory as C;

const fn class(mnemonic: &'static str, category: C, element_type: T, addressing: A) -> InstClass {
    InstClass {
        mnemonic,
        category,
        element_type,
        addressing,
        weight: 1,
    }
}

/// Every mnemonic the parser, simulator and reference model understand.
pub const SUPPORTED: &[InstClass] = &[
    class("vsetvli", C::VectorConfig, T::None, A::None),
    class("vsetivli", C::VectorConfig, T::None, A::None),
    class("vle8.v", C::VectorLoad, T::None, A::UnitStride),
    class("vle16.v", C::VectorLoad, T::None, A::UnitStride),
    class("vle32.v", C::VectorLoad, T::None, A::UnitStride),
    class("vle64.v", C::VectorLoad, T::None, A::UnitStride),
    class("vlse8.v", C::VectorLoad, T::None, A::Strided),
    class("vlse16.v", C::VectorLoad, T::None, A::Strided),
    class("vlse32.v", C::VectorLoad, T::None, A::Strided),
    class("vlse64.v", C::VectorLoad, T::None, A::Strided),
    class("vlm.v", C::VectorLoad, T::None, A::UnitStride),
    class("vse8.v", C::VectorStore, T::None, A::UnitStride),
    class("vse16.v", C::VectorStore, T::None, A::UnitStride),
    class("vse32.v", C::VectorStore, T::None, A::UnitStride),
    class("vse64.v", C::VectorStore, T::None, A::UnitStride),
    class("vsse8.v", C::VectorStore, T::None, A::Strided),
    class("vsse16.v", C::VectorStore, T::None, A::Strided),
    class("vsse32.v", C::VectorStore, T::None, A::Strided),
    class("vsse64.v", C::VectorStore, T::None, A::Strided),
    class("vsm.v", C::VectorStore, T::None, A::UnitStride),
    class("vadd.vv", C::VectorArith, T::Int, A::None),
    class("vmul.vv", C::VectorArith, T::Int, A::None),
    class("vmacc.vv", C::VectorArith, T::Int, A::None),
    class("vdiv.vv", C::VectorArith, T::Int, A::None),
    class("vmv.v.x", C::VectorArith, T::Int, A::None),
    class("vmv.v.i", C::VectorArith, T::Int, A::None),
    class("vfadd.vv", C::VectorArith, T::Fp, A::None),
    class("vfmul.vv", C::VectorArith, T::Fp, A::None),
    class("vfmacc.vv", C::VectorArith, T::Fp, A::None),
    class("vfdiv.vv", C::VectorArith, T::Fp, A::None),
    class("flw", C::ScalarFpLoad, T::Fp, A::UnitStride),
    class("fld", C::ScalarFpLoad, T::Fp, A::UnitStride),
    class("fsw", C::ScalarFpStore, T::Fp, A::UnitStride),
    class("fsd", C::ScalarFpStore, T::Fp, A::UnitStride),
    class("fadd.s", C::ScalarFpArith, T::Fp, A::None),
    class("fadd.d", C::ScalarFpArith, T::Fp, A::None),
    class("fmul.s", C::ScalarFpArith, T::Fp, A::None),
    class("fmul.d", C::ScalarFpArith, T::Fp, A::None),
    class("fmadd.s", C::ScalarFpArith, T::Fp, A::None),
    class("fmadd.d", C::ScalarFpArith, T::Fp, A::None),
    class("fdiv.s", C::ScalarFpArith, T::Fp, A::None),
    class("fdiv.d", C::ScalarFpArith, T::Fp, A::None),
    class("fmv.w.x", C::ScalarFpArith, T::Fp, A::None),
    class("fmv.d.x", C::ScalarFpArith, T::Fp, A::None),
    class("lb", C::ScalarInt, T::Int, A::UnitStride),
    class("lbu", C::ScalarInt, T::Int, A::UnitStride),
    class("lh", C::ScalarInt, T::Int, A::UnitStride),
    class("lhu", C::ScalarInt, T::Int, A::UnitStride),
    class("lw", C::ScalarInt, T::Int, A::UnitStride),
    class("lwu", C::ScalarInt, T::Int, A::UnitStride),
    class("ld", C::ScalarInt, T::Int, A::UnitStride),
    class("sb", C::ScalarInt, T::Int, A::UnitStride),
    class("sh", C::ScalarInt, T::Int, A::UnitStride),
    class("sw", C::ScalarInt, T::Int, A::UnitStride),
    class("sd", C::ScalarInt, T::Int, A::UnitStride),
    class("add", C::ScalarInt, T::Int, A::None),
    class("addi", C::ScalarInt, T::Int, A::None),
    class("sub", C::ScalarInt, T::Int, A::None),
    class("mul", C::ScalarInt, T::Int, A::None),
    class("div", C::ScalarInt, T::Int, A::None),
    class("slli", C::ScalarInt, T::Int, A::None),
    class("li", C::ScalarInt, T::Int, A::None),
    class("mv", C::ScalarInt, T::Int, A::None),
    InstClass {
        weight: 2,
        ..class("la", C::ScalarInt, T::Int, A::None)
    },
    class("beq", C::Control, T::None, A::None),
    class("bne", C::Control, T::None, A::None),
    class("blt", C::Control, T::None, A::None),
    class("bge", C::Control, T::None, A::None),
    class("bltu", C::Control, T::None, A::None),
    class("bgeu", C::Control, T::None, A::None),
    class("beqz", C::Control, T::None, A::None),
    class("bnez", C::Control, T::None, A::None),
    class("ret", C::Control, T::None, A::None),
];

impl InstClass {
    pub fn lookup(mnemonic: &str) -> Result<InstClass, UnsupportedInstruction> {
        SUPPORTED
            .iter()
            .find(|c| c.mnemonic == mnemonic)
            .copied()
            .ok_or_else(|| UnsupportedInstruction(mnemonic.to_string()))
    }

    /// The same instruction executed under a `v0.t` mask.
    pub fn masked(mut self) -> InstClass {
        if self.addressing == Addressing::UnitStride && self.category.is_vector() {
            self.addressing = Addressing::MaskedUnitStride;
        }
        self
    }

    /// Element width encoded in the mnemonic (`vle32.v`, `flw`, `fadd.d`, `lh`).
    pub fn encoded_width(&self) -> Option<Sew> {
        let m = self.mnemonic;
        let digits = |s: &str| -> Option<Sew> {
            let n: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
            n.parse().ok().and_then(|b| Sew::from_bits(b).ok())
        };
        match self.category {
            C::VectorLoad | C::VectorStore if m != "vlm.v" && m != "vsm.v" => digits(m),
            C::ScalarFpLoad | C::ScalarFpStore => match m {
                "flw" | "fsw" => Some(Sew::E32),
                _ => Some(Sew::E64),
            },
            C::ScalarFpArith if m.ends_with(".s") || m == "fmv.w.x" => Some(Sew::E32),
            C::ScalarFpArith => Some(Sew::E64),
            C::ScalarInt => match m {
                "lb" | "lbu" | "sb" => Some(Sew::E8),
                "lh" | "lhu" | "sh" => Some(Sew::E16),
                "lw" | "lwu" | "sw" => Some(Sew::E32),
                "ld" | "sd" => Some(Sew::E64),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_scalar_load(&self) -> bool {
        matches!(self.mnemonic, "lb" | "lbu" | "lh" | "lhu" | "lw" | "lwu" | "ld")
            || self.category == C::ScalarFpLoad
    }

    pub fn is_scalar_store(&self) -> bool {
        matches!(self.mnemonic, "sb" | "sh" | "sw" | "sd") || self.category == C::ScalarFpStore
    }
}

impl fmt::Display for InstClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic)
    }
}

/// Per-event increment for one retirement of `inst` (each entry 0 or 1).
///
/// Vector floating-point arithmetic increments `vec-ins` only; `fp-ins` is
/// reserved to scalar FP instructions.
pub fn attribute_events(inst: &InstClass) -> EventCounts {
    let mut c = EventCounts {
        retired: 1,
        ..Default::default()
    };
    match inst.category {
        C::VectorLoad => {
            c.vec = 1;
            c.vec_ld = 1;
        }
        C::VectorStore => {
            c.vec = 1;
            c.vec_st = 1;
        }
        C::VectorArith | C::VectorConfig => c.vec = 1,
        C::ScalarFpLoad => {
            c.fp = 1;
            c.fp_ld = 1;
        }
        C::ScalarFpStore => {
            c.fp = 1;
            c.fp_st = 1;
        }
        C::ScalarFpArith => c.fp = 1,
        C::ScalarInt | C::Control => {}
    }
    c
}

/// Increment for one occurrence, including multi-instruction pseudo expansions.
pub fn attribute_occurrence(inst: &InstClass) -> EventCounts {
    attribute_events(inst).scaled(inst.weight as u64)
}

/// Convenience: look up and attribute by mnemonic.
pub fn attribute_mnemonic(mnemonic: &str) -> Result<EventCounts, UnsupportedInstruction> {
    InstClass::lookup(mnemonic).map(|c| attribute_events(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn table_examples() {
        let vle = attribute_mnemonic("vle32.v").unwrap();
        assert_eq!(
            vle,
            EventCounts {
                retired: 1,
                vec: 1,
                vec_ld: 1,
                ..Default::default()
            }
        );
        let flw = attribute_mnemonic("flw").unwrap();
        assert_eq!(
            flw,
            EventCounts {
                retired: 1,
                fp: 1,
                fp_ld: 1,
                ..Default::default()
            }
        );
        let vfadd = attribute_mnemonic("vfadd.vv").unwrap();
        assert_eq!(vfadd.retired, 1);
        assert_eq!(vfadd.vec, 1);
        assert_eq!(vfadd.fp, 0);
    }

    #[test]
    fn unknown_mnemonic_is_rejected() {
        assert_eq!(
            attribute_mnemonic("vluxei32.v").unwrap_err(),
            UnsupportedInstruction("vluxei32.v".into())
        );
    }

    #[test]
    fn mnemonics_are_unique() {
        let names: HashSet<_> = SUPPORTED.iter().map(|c| c.mnemonic).collect();
        assert_eq!(names.len(), SUPPORTED.len());
    }

    #[test]
    fn at_most_one_memory_event_and_retired_always() {
        for class in SUPPORTED {
            for c in [*class, class.masked()] {
                let a = attribute_events(&c);
                assert_eq!(a.retired, 1, "{}", c.mnemonic);
                assert!(a.vec_ld + a.vec_st + a.fp_ld + a.fp_st <= 1, "{}", c.mnemonic);
                assert!(a.vec_ld + a.vec_st <= a.vec);
                assert!(a.fp_ld + a.fp_st <= a.fp);
            }
        }
    }

    #[test]
    fn integer_multiply_add_never_touches_fp() {
        let a = attribute_mnemonic("vmacc.vv").unwrap();
        assert_eq!(a.fp, 0);
        assert_eq!(a.vec, 1);
    }

    #[test]
    fn la_weighs_two() {
        let la = InstClass::lookup("la").unwrap();
        assert_eq!(attribute_occurrence(&la).retired, 2);
    }

    #[test]
    fn encoded_widths() {
        let w = |m| InstClass::lookup(m).unwrap().encoded_width();
        assert_eq!(w("vle8.v"), Some(Sew::E8));
        assert_eq!(w("vsse64.v"), Some(Sew::E64));
        assert_eq!(w("vlm.v"), None);
        assert_eq!(w("flw"), Some(Sew::E32));
        assert_eq!(w("fmadd.d"), Some(Sew::E64));
        assert_eq!(w("lh"), Some(Sew::E16));
        assert_eq!(w("add"), None);
    }

    #[test]
    fn masking_only_changes_vector_unit_stride() {
        let vle = InstClass::lookup("vle8.v").unwrap().masked();
        assert_eq!(vle.addressing, Addressing::MaskedUnitStride);
        let vlse = InstClass::lookup("vlse8.v").unwrap().masked();
        assert_eq!(vlse.addressing, Addressing::Strided);
    }
}
