//! One measured (or replayed) execution of a benchmark binary.

use serde::{Deserialize, Serialize};

use crate::events::{EventKind, PartialCounts};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSample {
    pub kernel_name: String,
    /// 1-based index within the batch.
    pub run_index: u32,
    pub elapsed_ns: u64,
    /// Holes mark events that were not mapped or not counted.
    pub counts: PartialCounts,
    #[serde(default)]
    pub exit_status: i32,
    /// Events whose counters were time-multiplexed during this run.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multiplexed: Vec<EventKind>,
    /// Events the counting tool reported as `<not counted>`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub not_counted: Vec<EventKind>,
}

impl RawSample {
    pub fn new(kernel_name: impl Into<String>, run_index: u32, elapsed_ns: u64, counts: PartialCounts) -> Self {
        RawSample {
            kernel_name: kernel_name.into(),
            run_index,
            elapsed_ns,
            counts,
            exit_status: 0,
            multiplexed: Vec::new(),
            not_counted: Vec::new(),
        }
    }

    pub fn succeeded(&self) -> bool {
        self.exit_status == 0 && self.elapsed_ns > 0
    }

    /// Count for `e` when present and not multiplexed.
    pub fn trusted(&self, e: EventKind) -> Option<u64> {
        if self.multiplexed.contains(&e) {
            None
        } else {
            self.counts[e]
        }
    }
}
