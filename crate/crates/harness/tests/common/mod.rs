//! Random calibration datasets shared by the property tests and the
//! acceptance checks.
#![allow(dead_code)]

use proptest::prelude::*;
use rvvprobe_core::{CalibrationReference, EventCounts, EventKind, PartialCounts, RawSample};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub references: Vec<CalibrationReference>,
    pub samples: Vec<RawSample>,
}

/// A reference count that is either tiny (under any sensible floor) or large.
fn reference_count() -> impl Strategy<Value = u64> {
    prop_oneof![0u64..2_000, 1_000_000u64..20_000_000_000]
}

/// One observation: a relative perturbation, or a hole, or a multiplexed read.
#[derive(Debug, Clone, Copy)]
enum Obs {
    Scaled(f64),
    Offset(u64),
    Hole,
    Multiplexed,
}

fn obs() -> impl Strategy<Value = Obs> {
    prop_oneof![
        8 => (-0.12f64..0.12).prop_map(Obs::Scaled),
        2 => (0u64..3_000).prop_map(Obs::Offset),
        1 => Just(Obs::Hole),
        1 => Just(Obs::Multiplexed),
    ]
}

fn kernel() -> impl Strategy<Value = ([u64; 7], Vec<[Obs; 7]>)> {
    (
        proptest::array::uniform7(reference_count()),
        proptest::collection::vec(proptest::array::uniform7(obs()), 3..9),
    )
}

pub fn dataset() -> impl Strategy<Value = Dataset> {
    proptest::collection::vec(kernel(), 1..6).prop_map(|kernels| {
        let mut references = Vec::new();
        let mut samples = Vec::new();
        for (k, (refs, runs)) in kernels.into_iter().enumerate() {
            let name = format!("k{k}");
            let mut counts = EventCounts::default();
            for e in EventKind::ALL {
                counts[e] = refs[e.index()];
            }
            references.push(CalibrationReference { kernel: name.clone(), counts });
            for (i, run) in runs.into_iter().enumerate() {
                let mut partial = PartialCounts::default();
                let mut sample = RawSample::new(&name, i as u32 + 1, 1_000, partial);
                for e in EventKind::ALL {
                    let r = refs[e.index()];
                    partial[e] = match run[e.index()] {
                        Obs::Scaled(f) => Some((r as f64 * (1.0 + f)).round().max(0.0) as u64),
                        Obs::Offset(d) => Some(r + d),
                        Obs::Hole => None,
                        Obs::Multiplexed => {
                            sample.multiplexed.push(e);
                            Some(r)
                        }
                    };
                }
                sample.counts = partial;
                samples.push(sample);
            }
        }
        Dataset { references, samples }
    })
}
