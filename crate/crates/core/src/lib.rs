//! Generation, static prediction, simulation and analysis of RVV 1.0
//! microbenchmark kernels.
//!
//! The numeric analysis layer is generic over [`num_traits::Float`]; the
//! aliases below fix it to `f64`, which is what the harness and CLI use.

pub mod analytics;
pub mod asm;
pub mod calibrate;
pub mod events;
pub mod inst;
pub mod kernelgen;
pub mod refmodel;
pub mod sample;
pub mod scalar;
pub mod sim;
pub mod vtype;

pub use calibrate::{
    calibrate_suite, classify_event, relative_error, CalibrationParams, CalibrationReference, CalibrationReport,
    CalibrationVerdict, Verdict,
};
pub use events::{EventCounts, EventKind, PartialCounts};
pub use inst::{attribute_events, InstCategory, InstClass};
pub use kernelgen::{generate_kernel, generate_suite, AssemblyModule, KernelMetadata, KernelSpec, Pattern, SuiteKind, SuiteOptions};
pub use refmodel::{parse_kernel, predict_counts, ParsedKernel, ReferenceCounts};
pub use sample::RawSample;
pub use sim::{execute, MachineState};
pub use vtype::{compute_vlmax, resolve_vl, Lmul, Policy, Sew, VectorConfig, VtypeState};

pub type ThroughputResult = analytics::ThroughputResult<f64>;
pub type Measurement = analytics::Measurement<f64>;
pub type SweepPoint = analytics::SweepPoint<f64>;
pub type SweepRow = analytics::SweepRow<f64>;
pub type SweepSummary = analytics::SweepSummary<f64>;
