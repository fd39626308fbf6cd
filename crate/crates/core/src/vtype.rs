//! Vector register configuration: VLEN, SEW, LMUL and the `vsetvli` state.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_VLEN_BITS: u32 = 128;
pub const MAX_VLEN_BITS: u32 = 16384;

/// Number of architectural vector registers.
pub const NUM_VREGS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VtypeError {
    #[error("VLEN {0} is not a power of two in [{MIN_VLEN_BITS}, {MAX_VLEN_BITS}]")]
    InvalidVlen(u32),
    #[error("unsupported element width {0} (expected 8, 16, 32 or 64)")]
    InvalidSew(u32),
    #[error("unsupported LMUL {0} (expected 1/8, 1/4, 1/2, 1, 2, 4 or 8)")]
    InvalidLmul(String),
    #[error("LMUL {lmul} with SEW {sew} on VLEN {vlen} holds no element")]
    NoElements { vlen: u32, sew: u32, lmul: Lmul },
    #[error("vl {vl} exceeds VLMAX {vlmax}")]
    VlOutOfRange { vl: u64, vlmax: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VectorConfig {
    vlen_bits: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clock_hz: Option<f64>,
}

impl VectorConfig {
    pub fn new(vlen_bits: u32) -> Result<Self, VtypeError> {
        if !vlen_bits.is_power_of_two() || !(MIN_VLEN_BITS..=MAX_VLEN_BITS).contains(&vlen_bits) {
            return Err(VtypeError::InvalidVlen(vlen_bits));
        }
        Ok(Self {
            vlen_bits,
            clock_hz: None,
        })
    }

    pub fn with_clock_hz(mut self, clock_hz: f64) -> Self {
        self.clock_hz = Some(clock_hz);
        self
    }

    pub fn vlen_bits(&self) -> u32 {
        self.vlen_bits
    }

    pub fn vlen_bytes(&self) -> usize {
        self.vlen_bits as usize / 8
    }

    pub fn clock_hz(&self) -> Option<f64> {
        self.clock_hz
    }
}

/// Selected element width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Sew {
    E8,
    E16,
    E32,
    E64,
}

impl Sew {
    pub const ALL: [Sew; 4] = [Sew::E8, Sew::E16, Sew::E32, Sew::E64];

    pub fn from_bits(bits: u32) -> Result<Self, VtypeError> {
        match bits {
            8 => Ok(Sew::E8),
            16 => Ok(Sew::E16),
            32 => Ok(Sew::E32),
            64 => Ok(Sew::E64),
            other => Err(VtypeError::InvalidSew(other)),
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            Sew::E8 => 8,
            Sew::E16 => 16,
            Sew::E32 => 32,
            Sew::E64 => 64,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }
}

impl TryFrom<u32> for Sew {
    type Error = VtypeError;
    fn try_from(bits: u32) -> Result<Self, Self::Error> {
        Sew::from_bits(bits)
    }
}

impl From<Sew> for u32 {
    fn from(sew: Sew) -> u32 {
        sew.bits()
    }
}

impl fmt::Display for Sew {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.bits())
    }
}

/// Register-group multiplier, an exact rational in {1/8, .., 8}.
///
/// Serialized in assembler syntax (`m2`, `mf4`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Lmul(Ratio<u32>);

impl Lmul {
    pub const M1: Lmul = Lmul(Ratio::new_raw(1, 1));
    pub const M2: Lmul = Lmul(Ratio::new_raw(2, 1));
    pub const M4: Lmul = Lmul(Ratio::new_raw(4, 1));
    pub const M8: Lmul = Lmul(Ratio::new_raw(8, 1));
    pub const MF2: Lmul = Lmul(Ratio::new_raw(1, 2));
    pub const MF4: Lmul = Lmul(Ratio::new_raw(1, 4));
    pub const MF8: Lmul = Lmul(Ratio::new_raw(1, 8));

    pub const ALL: [Lmul; 7] = [
        Lmul::MF8,
        Lmul::MF4,
        Lmul::MF2,
        Lmul::M1,
        Lmul::M2,
        Lmul::M4,
        Lmul::M8,
    ];
    pub const INTEGRAL: [Lmul; 4] = [Lmul::M1, Lmul::M2, Lmul::M4, Lmul::M8];

    pub fn new(value: Ratio<u32>) -> Result<Self, VtypeError> {
        Lmul::ALL
            .into_iter()
            .find(|l| l.0 == value)
            .ok_or_else(|| VtypeError::InvalidLmul(format!("{}/{}", value.numer(), value.denom())))
    }

    pub fn integral(n: u32) -> Result<Self, VtypeError> {
        Lmul::new(Ratio::from_integer(n))
    }

    pub fn ratio(self) -> Ratio<u32> {
        self.0
    }

    pub fn is_integral(self) -> bool {
        self.0.is_integer()
    }

    /// Registers occupied by one group: LMUL for LMUL >= 1, otherwise 1.
    pub fn group_regs(self) -> u32 {
        if self.is_integral() {
            self.0.to_integer()
        } else {
            1
        }
    }
}

impl fmt::Display for Lmul {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integral() {
            write!(f, "m{}", self.0.numer())
        } else {
            write!(f, "mf{}", self.0.denom())
        }
    }
}

impl FromStr for Lmul {
    type Err = VtypeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || VtypeError::InvalidLmul(s.to_string());
        let ratio = if let Some(d) = s.strip_prefix("mf") {
            Ratio::new(1, d.parse::<u32>().map_err(|_| bad())?)
        } else if let Some(n) = s.strip_prefix('m') {
            Ratio::from_integer(n.parse::<u32>().map_err(|_| bad())?)
        } else if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse::<u32>().map_err(|_| bad())?;
            let d = d.trim().parse::<u32>().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n, d)
        } else {
            Ratio::from_integer(s.parse::<u32>().map_err(|_| bad())?)
        };
        Lmul::new(ratio).map_err(|_| bad())
    }
}

impl TryFrom<String> for Lmul {
    type Error = VtypeError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Lmul> for String {
    fn from(l: Lmul) -> String {
        l.to_string()
    }
}

/// Tail / mask policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    #[default]
    Agnostic,
    Undisturbed,
}

impl Policy {
    pub fn tail_token(self) -> &'static str {
        match self {
            Policy::Agnostic => "ta",
            Policy::Undisturbed => "tu",
        }
    }

    pub fn mask_token(self) -> &'static str {
        match self {
            Policy::Agnostic => "ma",
            Policy::Undisturbed => "mu",
        }
    }
}

/// Dynamic vector typing state established by `vsetvli`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VtypeState {
    pub sew: Sew,
    pub lmul: Lmul,
    pub vta: Policy,
    pub vma: Policy,
    pub vl: u64,
}

impl VtypeState {
    pub fn new(
        cfg: &VectorConfig,
        sew: Sew,
        lmul: Lmul,
        vta: Policy,
        vma: Policy,
        vl: u64,
    ) -> Result<Self, VtypeError> {
        let vlmax = compute_vlmax(cfg, sew, lmul)?;
        if vl > vlmax {
            return Err(VtypeError::VlOutOfRange { vl, vlmax });
        }
        Ok(Self {
            sew,
            lmul,
            vta,
            vma,
            vl,
        })
    }
}

/// VLMAX = LMUL * VLEN / SEW, rounded down.
pub fn compute_vlmax(cfg: &VectorConfig, sew: Sew, lmul: Lmul) -> Result<u64, VtypeError> {
    let r = lmul.ratio();
    let elems = (*r.numer() as u64 * cfg.vlen_bits() as u64) / (*r.denom() as u64 * sew.bits() as u64);
    if elems == 0 {
        return Err(VtypeError::NoElements {
            vlen: cfg.vlen_bits(),
            sew: sew.bits(),
            lmul,
        });
    }
    Ok(elems)
}

/// Clamp a requested application vector length to VLMAX.
pub fn resolve_vl(avl: u64, vlmax: u64) -> u64 {
    avl.min(vlmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(vlen: u32) -> VectorConfig {
        VectorConfig::new(vlen).unwrap()
    }

    #[test]
    fn vlmax_examples() {
        assert_eq!(compute_vlmax(&cfg(256), Sew::E8, Lmul::M1).unwrap(), 32);
        assert_eq!(compute_vlmax(&cfg(256), Sew::E64, Lmul::M8).unwrap(), 32);
        assert_eq!(compute_vlmax(&cfg(128), Sew::E32, Lmul::MF2).unwrap(), 2);
    }

    #[test]
    fn vlmax_rejects_empty_fractional_group() {
        let err = compute_vlmax(&cfg(256), Sew::E64, Lmul::MF8).unwrap_err();
        assert!(matches!(err, VtypeError::NoElements { .. }));
    }

    #[test]
    fn resolve_vl_examples() {
        assert_eq!(resolve_vl(100, 32), 32);
        assert_eq!(resolve_vl(7, 32), 7);
        assert_eq!(resolve_vl(0, 32), 0);
    }

    #[test]
    fn vlen_domain() {
        assert!(VectorConfig::new(128).is_ok());
        assert!(VectorConfig::new(16384).is_ok());
        assert!(VectorConfig::new(64).is_err());
        assert!(VectorConfig::new(32768).is_err());
        assert!(VectorConfig::new(384).is_err());
    }

    #[test]
    fn lmul_syntax() {
        for l in Lmul::ALL {
            assert_eq!(l.to_string().parse::<Lmul>().unwrap(), l);
        }
        assert_eq!("1/4".parse::<Lmul>().unwrap(), Lmul::MF4);
        assert_eq!("4".parse::<Lmul>().unwrap(), Lmul::M4);
        assert!("m3".parse::<Lmul>().is_err());
        assert!("mf16".parse::<Lmul>().is_err());
        assert!("1/0".parse::<Lmul>().is_err());
    }

    #[test]
    fn vtype_state_bounds_vl() {
        let c = cfg(256);
        assert!(VtypeState::new(&c, Sew::E8, Lmul::M1, Policy::Agnostic, Policy::Agnostic, 32).is_ok());
        assert!(VtypeState::new(&c, Sew::E8, Lmul::M1, Policy::Agnostic, Policy::Agnostic, 33).is_err());
    }

    fn any_vlen() -> impl Strategy<Value = u32> {
        (7u32..=14).prop_map(|p| 1 << p)
    }

    proptest! {
        #[test]
        fn vlmax_doubles_when_sew_halves(vlen in any_vlen(), li in 0usize..7, si in 1usize..4) {
            let c = cfg(vlen);
            let lmul = Lmul::ALL[li];
            let narrow = Sew::ALL[si - 1];
            let wide = Sew::ALL[si];
            if let Ok(w) = compute_vlmax(&c, wide, lmul) {
                prop_assert_eq!(compute_vlmax(&c, narrow, lmul).unwrap(), 2 * w);
            }
        }

        #[test]
        fn vlmax_doubles_when_lmul_doubles(vlen in any_vlen(), li in 0usize..6, si in 0usize..4) {
            let c = cfg(vlen);
            let sew = Sew::ALL[si];
            if let Ok(small) = compute_vlmax(&c, sew, Lmul::ALL[li]) {
                prop_assert_eq!(compute_vlmax(&c, sew, Lmul::ALL[li + 1]).unwrap(), 2 * small);
            }
        }

        #[test]
        fn resolve_vl_monotone_and_bounded(a in 0u64..10_000, b in 0u64..10_000, vlmax in 1u64..4096) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(resolve_vl(lo, vlmax) <= resolve_vl(hi, vlmax));
            prop_assert!(resolve_vl(hi, vlmax) <= vlmax);
        }
    }
}
