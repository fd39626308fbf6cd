//! The seven calibrated performance events and count vectors over them.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    #[serde(rename = "retired-ins")]
    Retired,
    #[serde(rename = "vec-ins")]
    Vec,
    #[serde(rename = "vec-ld-ins")]
    VecLd,
    #[serde(rename = "vec-st-ins")]
    VecSt,
    #[serde(rename = "fp-ins")]
    Fp,
    #[serde(rename = "fp-ld-ins")]
    FpLd,
    #[serde(rename = "fp-st-ins")]
    FpSt,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown event `{0}`")]
pub struct UnknownEvent(pub String);

impl EventKind {
    pub const ALL: [EventKind; 7] = [
        EventKind::Retired,
        EventKind::Vec,
        EventKind::VecLd,
        EventKind::VecSt,
        EventKind::Fp,
        EventKind::FpLd,
        EventKind::FpSt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Canonical hyphenated name, e.g. `vec-ld-ins`.
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Retired => "retired-ins",
            EventKind::Vec => "vec-ins",
            EventKind::VecLd => "vec-ld-ins",
            EventKind::VecSt => "vec-st-ins",
            EventKind::Fp => "fp-ins",
            EventKind::FpLd => "fp-ld-ins",
            EventKind::FpSt => "fp-st-ins",
        }
    }

    /// Short field name used by fixtures and record files, e.g. `vec_ld`.
    pub fn field(self) -> &'static str {
        match self {
            EventKind::Retired => "retired",
            EventKind::Vec => "vec",
            EventKind::VecLd => "vec_ld",
            EventKind::VecSt => "vec_st",
            EventKind::Fp => "fp",
            EventKind::FpLd => "fp_ld",
            EventKind::FpSt => "fp_st",
        }
    }

    pub fn is_memory(self) -> bool {
        matches!(
            self,
            EventKind::VecLd | EventKind::VecSt | EventKind::FpLd | EventKind::FpSt
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = UnknownEvent;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        EventKind::ALL
            .into_iter()
            .find(|e| e.name() == s || e.field() == s || e.name().trim_end_matches("-ins") == s)
            .ok_or_else(|| UnknownEvent(s.to_string()))
    }
}

/// One count per event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub retired: u64,
    pub vec: u64,
    pub vec_ld: u64,
    pub vec_st: u64,
    pub fp: u64,
    pub fp_ld: u64,
    pub fp_st: u64,
}

impl EventCounts {
    pub fn get(&self, e: EventKind) -> u64 {
        self[e]
    }

    pub fn iter(&self) -> impl Iterator<Item = (EventKind, u64)> + '_ {
        EventKind::ALL.into_iter().map(move |e| (e, self[e]))
    }

    pub fn scaled(&self, factor: u64) -> EventCounts {
        let mut out = *self;
        for e in EventKind::ALL {
            out[e] = self[e] * factor;
        }
        out
    }

    pub fn checked_scaled(&self, factor: u64) -> Option<EventCounts> {
        let mut out = *self;
        for e in EventKind::ALL {
            out[e] = self[e].checked_mul(factor)?;
        }
        Some(out)
    }

    pub fn to_partial(&self) -> PartialCounts {
        let mut p = PartialCounts::default();
        for (e, v) in self.iter() {
            p[e] = Some(v);
        }
        p
    }
}

impl Index<EventKind> for EventCounts {
    type Output = u64;
    fn index(&self, e: EventKind) -> &u64 {
        match e {
            EventKind::Retired => &self.retired,
            EventKind::Vec => &self.vec,
            EventKind::VecLd => &self.vec_ld,
            EventKind::VecSt => &self.vec_st,
            EventKind::Fp => &self.fp,
            EventKind::FpLd => &self.fp_ld,
            EventKind::FpSt => &self.fp_st,
        }
    }
}

impl IndexMut<EventKind> for EventCounts {
    fn index_mut(&mut self, e: EventKind) -> &mut u64 {
        match e {
            EventKind::Retired => &mut self.retired,
            EventKind::Vec => &mut self.vec,
            EventKind::VecLd => &mut self.vec_ld,
            EventKind::VecSt => &mut self.vec_st,
            EventKind::Fp => &mut self.fp,
            EventKind::FpLd => &mut self.fp_ld,
            EventKind::FpSt => &mut self.fp_st,
        }
    }
}

impl Add for EventCounts {
    type Output = EventCounts;
    fn add(mut self, rhs: EventCounts) -> EventCounts {
        self += rhs;
        self
    }
}

impl AddAssign for EventCounts {
    fn add_assign(&mut self, rhs: EventCounts) {
        for e in EventKind::ALL {
            self[e] += rhs[e];
        }
    }
}

/// Counts with holes for events that were not mapped or not counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialCounts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retired: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vec: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vec_ld: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vec_st: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp_ld: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp_st: Option<u64>,
}

impl PartialCounts {
    pub fn get(&self, e: EventKind) -> Option<u64> {
        self[e]
    }

    pub fn present(&self) -> impl Iterator<Item = (EventKind, u64)> + '_ {
        EventKind::ALL
            .into_iter()
            .filter_map(move |e| self[e].map(|v| (e, v)))
    }

    /// All seven present.
    pub fn complete(&self) -> Option<EventCounts> {
        let mut out = EventCounts::default();
        for e in EventKind::ALL {
            out[e] = self[e]?;
        }
        Some(out)
    }
}

impl Index<EventKind> for PartialCounts {
    type Output = Option<u64>;
    fn index(&self, e: EventKind) -> &Option<u64> {
        match e {
            EventKind::Retired => &self.retired,
            EventKind::Vec => &self.vec,
            EventKind::VecLd => &self.vec_ld,
            EventKind::VecSt => &self.vec_st,
            EventKind::Fp => &self.fp,
            EventKind::FpLd => &self.fp_ld,
            EventKind::FpSt => &self.fp_st,
        }
    }
}

impl IndexMut<EventKind> for PartialCounts {
    fn index_mut(&mut self, e: EventKind) -> &mut Option<u64> {
        match e {
            EventKind::Retired => &mut self.retired,
            EventKind::Vec => &mut self.vec,
            EventKind::VecLd => &mut self.vec_ld,
            EventKind::VecSt => &mut self.vec_st,
            EventKind::Fp => &mut self.fp,
            EventKind::FpLd => &mut self.fp_ld,
            EventKind::FpSt => &mut self.fp_st,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in EventKind::ALL {
            assert_eq!(e.name().parse::<EventKind>().unwrap(), e);
            assert_eq!(e.field().parse::<EventKind>().unwrap(), e);
        }
        assert_eq!("vec-ld".parse::<EventKind>().unwrap(), EventKind::VecLd);
        assert!("cycles".parse::<EventKind>().is_err());
    }

    #[test]
    fn serde_uses_hyphenated_names() {
        let s = serde_json::to_string(&EventKind::FpLd).unwrap();
        assert_eq!(s, "\"fp-ld-ins\"");
    }

    #[test]
    fn partial_complete() {
        let full = EventCounts {
            retired: 3,
            vec: 1,
            ..Default::default()
        };
        assert_eq!(full.to_partial().complete(), Some(full));
        let mut p = full.to_partial();
        p.fp = None;
        assert_eq!(p.complete(), None);
        assert_eq!(p.present().count(), 6);
    }
}
