//! Host-side machinery around the rvvprobe core: platform discovery, perf
//! driven runs, replay fixtures, compiler campaigns, the results store and
//! report rendering.

pub mod campaign;
pub mod perf;
pub mod platform;
pub mod replay;
pub mod report;
pub mod runner;
pub mod store;
