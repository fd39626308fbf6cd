//! Derived metrics over samples and campaign records.
//!
//! Everything here is generic over the floating-point type; the crate root
//! provides `f64` aliases.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibrate::UnusableEvent;
use crate::events::{EventCounts, EventKind};
use crate::kernelgen::{elements_per_inst, GenError, KernelSpec};
use crate::sample::RawSample;
use crate::vtype::VectorConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyticsError {
    #[error("sample for `{0}` has no elapsed time")]
    NoElapsed(String),
    #[error("{what} must be positive")]
    NonPositive { what: &'static str },
    #[error("element operation count overflows 64 bits")]
    Overflow,
    #[error(transparent)]
    Spec(#[from] GenError),
    #[error("{0}; see the calibration report")]
    Unusable(#[from] UnusableEvent),
    #[error("event {0} is outside the calibrated usable set; see the calibration report")]
    NotCalibrated(EventKind),
}

fn cast<T: Float>(v: u64) -> T {
    T::from(v).expect("u64 converts to a float type")
}

/// Element throughput of one kernel run. Gops/s equals element operations
/// per nanosecond.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputResult<T> {
    pub kernel: String,
    pub element_ops_total: u64,
    pub elapsed_ns: u64,
    pub gops_per_sec: T,
    pub elements_per_inst: u64,
}

pub fn throughput<T: Float>(
    spec: &KernelSpec,
    cfg: &VectorConfig,
    sample: &RawSample,
) -> Result<ThroughputResult<T>, AnalyticsError> {
    if sample.elapsed_ns == 0 {
        return Err(AnalyticsError::NoElapsed(spec.name.clone()));
    }
    let epi = elements_per_inst(spec, cfg)?;
    let total = spec
        .iterations
        .checked_mul(spec.unroll as u64)
        .and_then(|n| n.checked_mul(epi))
        .ok_or(AnalyticsError::Overflow)?;
    Ok(ThroughputResult {
        kernel: spec.name.clone(),
        element_ops_total: total,
        elapsed_ns: sample.elapsed_ns,
        gops_per_sec: cast::<T>(total) / cast::<T>(sample.elapsed_ns),
        elements_per_inst: epi,
    })
}

/// Throughput lost by `variant` relative to `reference`: `1 - variant / reference`.
pub fn loss_fraction<T: Float>(reference_gops: T, variant_gops: T) -> T {
    T::one() - variant_gops / reference_gops
}

pub fn overhead_fraction<T: Float>(reference: &ThroughputResult<T>, variant: &ThroughputResult<T>) -> T {
    loss_fraction(reference.gops_per_sec, variant.gops_per_sec)
}

fn ratio<T: Float>(baseline: T, variant: T) -> Result<T, AnalyticsError> {
    if !(baseline > T::zero()) {
        return Err(AnalyticsError::NonPositive { what: "baseline" });
    }
    if !(variant > T::zero()) {
        return Err(AnalyticsError::NonPositive { what: "variant" });
    }
    Ok(baseline / variant)
}

/// `baseline_runtime / variant_runtime`; above 1 the variant is faster.
pub fn speedup<T: Float>(baseline_runtime: T, variant_runtime: T) -> Result<T, AnalyticsError> {
    ratio(baseline_runtime, variant_runtime)
}

/// `baseline_retired / variant_retired`; above 1 the variant retires fewer.
pub fn instruction_reduction<T: Float>(baseline_retired: T, variant_retired: T) -> Result<T, AnalyticsError> {
    ratio(baseline_retired, variant_retired)
}

/// Components of the default retired-instruction breakdown.
pub const MIX_COMPONENTS: [EventKind; 4] = [EventKind::VecLd, EventKind::VecSt, EventKind::FpLd, EventKind::FpSt];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionMix {
    pub retired: u64,
    pub components: Vec<(EventKind, u64)>,
    /// `retired` minus the listed components, at least zero.
    pub other: u64,
    /// Set when the components exceeded `retired` and `other` was clamped.
    pub clamped: bool,
}

impl InstructionMix {
    pub fn component(&self, e: EventKind) -> Option<u64> {
        self.components.iter().find(|(k, _)| *k == e).map(|(_, v)| *v)
    }

    pub fn fraction<T: Float>(&self, count: u64) -> T {
        if self.retired == 0 {
            T::zero()
        } else {
            cast::<T>(count) / cast::<T>(self.retired)
        }
    }
}

/// Breakdown of `retired` into vector/FP load/store and everything else.
pub fn instruction_mix(counts: &EventCounts, usable: &[EventKind]) -> Result<InstructionMix, AnalyticsError> {
    instruction_mix_of(counts, &MIX_COMPONENTS, usable)
}

/// Breakdown over caller-chosen components; each must be calibrated usable.
pub fn instruction_mix_of(
    counts: &EventCounts,
    components: &[EventKind],
    usable: &[EventKind],
) -> Result<InstructionMix, AnalyticsError> {
    for &e in std::iter::once(&EventKind::Retired).chain(components) {
        if !usable.contains(&e) {
            return Err(AnalyticsError::NotCalibrated(e));
        }
    }
    let parts: Vec<(EventKind, u64)> = components.iter().map(|&e| (e, counts[e])).collect();
    let sum: u128 = parts.iter().map(|(_, v)| *v as u128).sum();
    let retired = counts.retired;
    let (other, clamped) = if sum > retired as u128 {
        (0, true)
    } else {
        (retired - sum as u64, false)
    };
    Ok(InstructionMix {
        retired,
        components: parts,
        other,
        clamped,
    })
}

/// Runtime and retired count of one build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement<T> {
    pub runtime_ns: T,
    pub retired: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint<T> {
    pub lmul: u32,
    pub measurement: Measurement<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    pub lmul: u32,
    /// `None` marks a missing LMUL level.
    pub speedup: Option<T>,
    pub reduction: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary<T> {
    pub rows: Vec<SweepRow<T>>,
    pub best_lmul: Option<u32>,
    /// Speedup of the compiler's default LMUL choice, when measured.
    pub default_speedup: Option<T>,
    /// Whether the best swept LMUL is faster than the default choice.
    pub best_beats_default: Option<bool>,
    pub missing: Vec<u32>,
}

pub const SWEEP_LMULS: [u32; 4] = [1, 2, 4, 8];

/// Per-LMUL speedup and instruction reduction against `baseline`.
pub fn lmul_sweep_summary<T: Float>(
    baseline: Measurement<T>,
    default_choice: Option<Measurement<T>>,
    points: &[SweepPoint<T>],
) -> Result<SweepSummary<T>, AnalyticsError> {
    let mut rows = Vec::new();
    let mut missing = Vec::new();
    let mut best: Option<(u32, T)> = None;
    for lmul in SWEEP_LMULS {
        match points.iter().find(|p| p.lmul == lmul) {
            Some(p) => {
                let s = speedup(baseline.runtime_ns, p.measurement.runtime_ns)?;
                let r = instruction_reduction(cast::<T>(baseline.retired), cast::<T>(p.measurement.retired))?;
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((lmul, s));
                }
                rows.push(SweepRow {
                    lmul,
                    speedup: Some(s),
                    reduction: Some(r),
                });
            }
            None => {
                missing.push(lmul);
                rows.push(SweepRow {
                    lmul,
                    speedup: None,
                    reduction: None,
                });
            }
        }
    }
    let default_speedup = match default_choice {
        Some(d) => Some(speedup(baseline.runtime_ns, d.runtime_ns)?),
        None => None,
    };
    let best_beats_default = match (best, default_speedup) {
        (Some((_, b)), Some(d)) => Some(b > d),
        _ => None,
    };
    Ok(SweepSummary {
        rows,
        best_lmul: best.map(|(l, _)| l),
        default_speedup,
        best_beats_default,
        missing,
    })
}
