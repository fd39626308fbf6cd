//! Platform description: vector length, clock, and the mapping from logical
//! events to the raw selectors understood by the counting tool.
//!
//! Raw selectors are implementation-defined on RISC-V, so they come from a
//! TOML file. Only `retired-ins` has a built-in default (`instructions`).

use std::collections::BTreeMap;
use std::path::Path;

use rvvprobe_core::vtype::{VectorConfig, VtypeError};
use rvvprobe_core::EventKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RETIRED_SELECTOR: &str = "instructions";

#[derive(Debug, Error)]
pub enum PlatformError {
    #[error("cannot read platform config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid platform config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unknown event `{0}` in event_map")]
    UnknownEvent(String),
    #[error(transparent)]
    Vtype(#[from] VtypeError),
    #[error("event {0} has no selector in the platform event_map")]
    Unmapped(EventKind),
    #[error("configured VLEN {configured} does not match probed VLEN {probed}")]
    VlenMismatch { configured: u32, probed: u32 },
    #[error("no vector unit available on this host; only replay mode is possible")]
    NoVectorUnit,
}

/// On-disk form of a platform file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatformConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub vlen_bits: Option<u32>,
    #[serde(default)]
    pub core_count: Option<u32>,
    #[serde(default)]
    pub clock_hz: Option<f64>,
    /// Logical event name (`vec-ld-ins` or `vec_ld`) to raw selector.
    #[serde(default)]
    pub event_map: BTreeMap<String, String>,
    #[serde(default)]
    pub perf: Option<String>,
    #[serde(default)]
    pub taskset: Option<String>,
}

impl PlatformConfig {
    pub fn load(path: &Path) -> Result<PlatformConfig, PlatformError> {
        let text = std::fs::read_to_string(path).map_err(|source| PlatformError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text).map_err(|e| match e {
            PlatformError::Parse { message, .. } => PlatformError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<PlatformConfig, PlatformError> {
        let cfg: PlatformConfig = toml::from_str(text).map_err(|e| PlatformError::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        cfg.selectors()?;
        if let Some(v) = cfg.vlen_bits {
            VectorConfig::new(v)?;
        }
        Ok(cfg)
    }

    /// Resolved selector table, with the built-in default for retired.
    pub fn selectors(&self) -> Result<BTreeMap<EventKind, String>, PlatformError> {
        let mut out = BTreeMap::new();
        out.insert(EventKind::Retired, DEFAULT_RETIRED_SELECTOR.to_string());
        for (k, v) in &self.event_map {
            let e: EventKind = k.parse().map_err(|_| PlatformError::UnknownEvent(k.clone()))?;
            out.insert(e, v.clone());
        }
        Ok(out)
    }
}

/// What the runner knows about the machine it drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformInfo {
    pub name: Option<String>,
    pub vlen_bits: u32,
    pub core_count: u32,
    pub clock_hz: Option<f64>,
    pub event_map: BTreeMap<EventKind, String>,
}

impl PlatformInfo {
    /// Combine a probed VLEN with the config; the two must agree when both exist.
    pub fn resolve(config: &PlatformConfig, probed_vlen: Option<u32>) -> Result<PlatformInfo, PlatformError> {
        let vlen_bits = match (config.vlen_bits, probed_vlen) {
            (Some(c), Some(p)) if c != p => {
                return Err(PlatformError::VlenMismatch {
                    configured: c,
                    probed: p,
                })
            }
            (_, Some(p)) => p,
            (Some(c), None) => c,
            (None, None) => return Err(PlatformError::NoVectorUnit),
        };
        VectorConfig::new(vlen_bits)?;
        Ok(PlatformInfo {
            name: config.name.clone(),
            vlen_bits,
            core_count: config
                .core_count
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get() as u32)),
            clock_hz: config.clock_hz,
            event_map: config.selectors()?,
        })
    }

    pub fn vector_config(&self) -> VectorConfig {
        let cfg = VectorConfig::new(self.vlen_bits).expect("validated on construction");
        match self.clock_hz {
            Some(hz) => cfg.with_clock_hz(hz),
            None => cfg,
        }
    }

    pub fn selector(&self, e: EventKind) -> Result<&str, PlatformError> {
        self.event_map.get(&e).map(String::as_str).ok_or(PlatformError::Unmapped(e))
    }
}

/// Probe the host vector length and merge it with `config`.
pub fn probe_platform(config: &PlatformConfig) -> Result<PlatformInfo, PlatformError> {
    let probed = probe_vlen_bits().ok_or(PlatformError::NoVectorUnit)?;
    PlatformInfo::resolve(config, Some(probed))
}

/// VLEN in bits from a one-shot `vsetvli` at e8/m1, or `None` without RVV.
#[cfg(target_arch = "riscv64")]
pub fn probe_vlen_bits() -> Option<u32> {
    if !host_has_rvv() {
        return None;
    }
    let vlmax: usize;
    // SAFETY: the ISA string reports the V extension, so vsetvli is legal;
    // it touches only the output register and vector CSRs.
    unsafe {
        std::arch::asm!(
            ".option push",
            ".option arch, +v",
            "vsetvli {0}, zero, e8, m1, ta, ma",
            ".option pop",
            out(reg) vlmax,
        );
    }
    Some(8 * vlmax as u32)
}

#[cfg(target_arch = "riscv64")]
fn host_has_rvv() -> bool {
    let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") else {
        return false;
    };
    info.lines()
        .filter(|l| l.starts_with("isa"))
        .filter_map(|l| l.split(':').nth(1))
        .any(|isa| isa_has_vector(isa.trim()))
}

#[cfg(not(target_arch = "riscv64"))]
pub fn probe_vlen_bits() -> Option<u32> {
    None
}

/// Whether an ISA string such as `rv64imafdcv_zicsr` contains the single-letter V.
pub fn isa_has_vector(isa: &str) -> bool {
    let isa = isa.to_ascii_lowercase();
    let Some(rest) = isa.strip_prefix("rv64").or_else(|| isa.strip_prefix("rv32")) else {
        return false;
    };
    rest.split('_').next().is_some_and(|base| base.contains('v'))
}
