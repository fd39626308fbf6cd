//! Counter calibration: which hardware events can be trusted.
//!
//! An event is reliable when, on every kernel that has samples for it, every
//! run's count lies within `tolerance` of the known reference. References
//! below `floor` are compared against `floor` instead, so a few stray counts
//! on an event the kernel never exercises do not fail it.

use std::collections::BTreeMap;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{EventCounts, EventKind};
use crate::refmodel::ReferenceCounts;
use crate::sample::RawSample;

pub const DEFAULT_TOLERANCE: f64 = 0.05;
pub const DEFAULT_FLOOR: f64 = 1e6;
pub const DEFAULT_RUNS: usize = 5;

/// `|observed - reference| / max(reference, floor)`.
pub fn relative_error<T: Float>(observed: T, reference: T, floor: T) -> T {
    (observed - reference).abs() / reference.max(floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub tolerance: f64,
    pub floor: f64,
    /// Runs required per kernel before it can vouch for an event.
    pub min_runs: usize,
}

impl Default for CalibrationParams {
    fn default() -> Self {
        CalibrationParams {
            tolerance: DEFAULT_TOLERANCE,
            floor: DEFAULT_FLOOR,
            min_runs: DEFAULT_RUNS,
        }
    }
}

/// Known-by-construction counts for one kernel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationReference {
    pub kernel: String,
    pub counts: EventCounts,
}

impl CalibrationReference {
    /// The retired reference is the target-instruction count alone, so the
    /// loop-control overhead shows up as error; every other event uses the
    /// full static prediction.
    pub fn from_reference_counts(kernel: impl Into<String>, r: &ReferenceCounts) -> Self {
        let mut counts = r.counts;
        counts.retired = r.target_inst_count;
        CalibrationReference {
            kernel: kernel.into(),
            counts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Reliable,
    Unreliable,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    pub kernel: String,
    pub reference: u64,
    pub runs: usize,
    pub observed_mean: Option<f64>,
    /// Worst run.
    pub relative_error: Option<f64>,
    /// `None` when the kernel lacks usable samples for this event.
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationVerdict {
    pub event: EventKind,
    pub per_kernel: Vec<KernelCheck>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub params: CalibrationParams,
    pub verdicts: Vec<CalibrationVerdict>,
    pub usable: Vec<EventKind>,
    pub excluded: Vec<EventKind>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("event {event} is not usable: calibration verdict is {verdict:?}")]
pub struct UnusableEvent {
    pub event: EventKind,
    pub verdict: Verdict,
}

impl CalibrationReport {
    pub fn verdict(&self, e: EventKind) -> Option<&CalibrationVerdict> {
        self.verdicts.iter().find(|v| v.event == e)
    }

    pub fn is_usable(&self, e: EventKind) -> bool {
        self.usable.contains(&e)
    }

    pub fn require_usable(&self, events: &[EventKind]) -> Result<(), UnusableEvent> {
        for &e in events {
            if !self.is_usable(e) {
                let verdict = self.verdict(e).map_or(Verdict::Indeterminate, |v| v.verdict);
                return Err(UnusableEvent { event: e, verdict });
            }
        }
        Ok(())
    }

    /// All seven events reliable, used where no calibration data exists.
    pub fn assume_all_usable() -> CalibrationReport {
        CalibrationReport {
            params: CalibrationParams::default(),
            verdicts: Vec::new(),
            usable: EventKind::ALL.to_vec(),
            excluded: Vec::new(),
        }
    }
}

fn group_by_kernel(samples: &[RawSample]) -> BTreeMap<&str, Vec<&RawSample>> {
    let mut m: BTreeMap<&str, Vec<&RawSample>> = BTreeMap::new();
    for s in samples {
        m.entry(s.kernel_name.as_str()).or_default().push(s);
    }
    m
}

fn check_kernel(
    event: EventKind,
    reference: &CalibrationReference,
    samples: &[&RawSample],
    params: &CalibrationParams,
) -> (KernelCheck, Option<String>) {
    let r = reference.counts[event];
    let observed: Option<Vec<u64>> = samples
        .iter()
        .filter(|s| s.succeeded())
        .map(|s| s.trusted(event))
        .collect();
    let mut check = KernelCheck {
        kernel: reference.kernel.clone(),
        reference: r,
        runs: 0,
        observed_mean: None,
        relative_error: None,
        pass: None,
    };
    let observed = match observed {
        Some(v) => v,
        None => {
            return (
                check,
                Some(format!("{}: {event} missing or multiplexed in some run", reference.kernel)),
            )
        }
    };
    check.runs = observed.len();
    if observed.len() < params.min_runs {
        return (
            check,
            Some(format!(
                "{}: {} successful runs, {} required",
                reference.kernel,
                observed.len(),
                params.min_runs
            )),
        );
    }
    let sum: u128 = observed.iter().map(|&v| v as u128).sum();
    check.observed_mean = Some(sum as f64 / observed.len() as f64);
    let worst = observed
        .iter()
        .map(|&o| relative_error(o as f64, r as f64, params.floor))
        .fold(0.0f64, f64::max);
    check.relative_error = Some(worst);
    check.pass = Some(worst <= params.tolerance);
    (check, None)
}

/// Verdict for one event over all reference kernels.
pub fn classify_event(
    event: EventKind,
    samples: &[RawSample],
    references: &[CalibrationReference],
    params: &CalibrationParams,
) -> CalibrationVerdict {
    let by_kernel = group_by_kernel(samples);
    let mut per_kernel = Vec::new();
    let mut diagnostics = Vec::new();
    let mut exercised = false;
    let mut failed = false;
    let mut missing_exercised = false;
    for reference in references {
        let exercises = reference.counts[event] as f64 >= params.floor;
        exercised |= exercises;
        let kernel_samples = by_kernel.get(reference.kernel.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let (check, diag) = check_kernel(event, reference, kernel_samples, params);
        match check.pass {
            Some(false) => failed = true,
            None if exercises => missing_exercised = true,
            _ => {}
        }
        diagnostics.extend(diag);
        per_kernel.push(check);
    }
    let verdict = if failed {
        Verdict::Unreliable
    } else if !exercised {
        diagnostics.push(format!("no reference kernel exercises {event}"));
        Verdict::Indeterminate
    } else if missing_exercised {
        Verdict::Indeterminate
    } else {
        Verdict::Reliable
    };
    CalibrationVerdict {
        event,
        per_kernel,
        verdict,
        diagnostics,
    }
}

/// Classify all seven events and derive the usable set.
pub fn calibrate_suite(
    samples: &[RawSample],
    references: &[CalibrationReference],
    params: &CalibrationParams,
) -> CalibrationReport {
    let verdicts: Vec<CalibrationVerdict> = EventKind::ALL
        .into_iter()
        .map(|e| classify_event(e, samples, references, params))
        .collect();
    let usable = verdicts
        .iter()
        .filter(|v| v.verdict == Verdict::Reliable)
        .map(|v| v.event)
        .collect();
    let excluded = verdicts
        .iter()
        .filter(|v| v.verdict != Verdict::Reliable)
        .map(|v| v.event)
        .collect();
    CalibrationReport {
        params: *params,
        verdicts,
        usable,
        excluded,
    }
}
