//! Element types and the element-wise operations the simulator applies.
//!
//! Integer vector arithmetic is signed two's complement with wrapping
//! overflow. Floating-point results that are NaN are replaced by the
//! canonical quiet NaN of their width.

use half::f16;
use num_traits::{Float, PrimInt, Signed, WrappingAdd, WrappingMul, WrappingSub};

/// A value stored in a vector register element or a memory location.
pub trait Element: Copy + PartialEq + std::fmt::Debug + 'static {
    const BYTES: usize;
    fn from_bits(bits: u64) -> Self;
    fn to_bits(self) -> u64;

    fn read_le(bytes: &[u8]) -> Self {
        let mut buf = [0u8; 8];
        buf[..Self::BYTES].copy_from_slice(&bytes[..Self::BYTES]);
        Self::from_bits(u64::from_le_bytes(buf))
    }

    fn write_le(self, out: &mut [u8]) {
        out[..Self::BYTES].copy_from_slice(&self.to_bits().to_le_bytes()[..Self::BYTES]);
    }
}

macro_rules! int_element {
    ($($t:ty => $u:ty),*) => {$(
        impl Element for $t {
            const BYTES: usize = std::mem::size_of::<$t>();
            fn from_bits(bits: u64) -> Self {
                bits as $u as $t
            }
            fn to_bits(self) -> u64 {
                self as $u as u64
            }
        }
    )*};
}

int_element!(i8 => u8, i16 => u16, i32 => u32, i64 => u64, u8 => u8, u16 => u16, u32 => u32, u64 => u64);

impl Element for f16 {
    const BYTES: usize = 2;
    fn from_bits(bits: u64) -> Self {
        f16::from_bits(bits as u16)
    }
    fn to_bits(self) -> u64 {
        f16::to_bits(self) as u64
    }
}

impl Element for f32 {
    const BYTES: usize = 4;
    fn from_bits(bits: u64) -> Self {
        f32::from_bits(bits as u32)
    }
    fn to_bits(self) -> u64 {
        f32::to_bits(self) as u64
    }
}

impl Element for f64 {
    const BYTES: usize = 8;
    fn from_bits(bits: u64) -> Self {
        f64::from_bits(bits)
    }
    fn to_bits(self) -> u64 {
        f64::to_bits(self)
    }
}

/// Signed integer lane.
pub trait IntLane: Element + PrimInt + Signed + WrappingAdd + WrappingSub + WrappingMul {}
impl<T: Element + PrimInt + Signed + WrappingAdd + WrappingSub + WrappingMul> IntLane for T {}

/// Floating-point lane.
pub trait FpLane: Element + Float {}
impl<T: Element + Float> FpLane for T {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// RISC-V integer semantics: division by zero yields all ones and
/// `MIN / -1` yields `MIN`.
pub fn int_binop<T: IntLane>(op: BinOp, a: T, b: T) -> T {
    match op {
        BinOp::Add => a.wrapping_add(&b),
        BinOp::Sub => a.wrapping_sub(&b),
        BinOp::Mul => a.wrapping_mul(&b),
        BinOp::Div => {
            if b.is_zero() {
                -T::one()
            } else if a == T::min_value() && b == -T::one() {
                a
            } else {
                a / b
            }
        }
    }
}

/// `acc + a * b` with wrapping.
pub fn int_macc<T: IntLane>(acc: T, a: T, b: T) -> T {
    acc.wrapping_add(&a.wrapping_mul(&b))
}

fn canonical<T: FpLane>(x: T) -> T {
    if x.is_nan() {
        T::nan()
    } else {
        x
    }
}

pub fn fp_binop<T: FpLane>(op: BinOp, a: T, b: T) -> T {
    canonical(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => a / b,
    })
}

/// Fused `a * b + acc`, rounded once.
pub fn fp_fma<T: FpLane>(a: T, b: T, acc: T) -> T {
    canonical(a.mul_add(b, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn riscv_division_corner_cases() {
        assert_eq!(int_binop(BinOp::Div, 7i32, 0), -1);
        assert_eq!(int_binop(BinOp::Div, i64::MIN, -1), i64::MIN);
        assert_eq!(int_binop(BinOp::Div, -7i8, 2), -3);
        assert_eq!(int_binop(BinOp::Mul, i16::MAX, 2), -2);
    }

    #[test]
    fn nan_is_canonical() {
        let n = fp_binop(BinOp::Sub, f32::INFINITY, f32::INFINITY);
        assert_eq!(n.to_bits(), 0x7fc0_0000);
        let h = fp_binop(BinOp::Div, f16::ZERO, f16::ZERO);
        assert_eq!(Element::to_bits(h), 0x7e00);
    }

    #[test]
    fn fma_rounds_once() {
        let a = 1.0f32 + 2f32.powi(-12);
        let c = -(1.0f32 + 2f32.powi(-11));
        assert_eq!(fp_fma(a, a, c), 2f32.powi(-24));
        assert_ne!(a * a + c, 2f32.powi(-24));
    }

    proptest! {
        #[test]
        fn bytes_round_trip(v: i32, w: u16) {
            let mut buf = [0u8; 8];
            v.write_le(&mut buf);
            prop_assert_eq!(i32::read_le(&buf), v);
            let h = f16::from_bits(w);
            h.write_le(&mut buf);
            prop_assert_eq!(Element::to_bits(f16::read_le(&buf)), w as u64);
        }

        #[test]
        fn macc_matches_wide_arithmetic(acc: i8, a: i8, b: i8) {
            let wide = acc as i32 + a as i32 * b as i32;
            prop_assert_eq!(int_macc(acc, a, b), wide as i8);
        }
    }
}
