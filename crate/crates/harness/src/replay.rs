//! Recorded benchmark samples in the replay fixture format.
//!
//! Hardware runs are saved in the same format, so downstream code cannot tell
//! a replay from a live measurement.

use std::path::{Path, PathBuf};

use rvvprobe_core::refmodel::RefModelError;
use rvvprobe_core::vtype::VectorConfig;
use rvvprobe_core::{
    generate_kernel, parse_kernel, predict_counts, CalibrationReference, EventKind, KernelSpec, PartialCounts,
    RawSample,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// File name used when a results directory is given instead of a fixture file.
pub const SAMPLES_FILE: &str = "samples.json";

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: schema violation at `{field}`: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
    #[error("kernel `{kernel}` has no spec_echo, so no reference can be derived")]
    NoSpec { kernel: String },
    #[error("kernel `{kernel}`: {message}")]
    Reference { kernel: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixturePlatform {
    pub vlen: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureRun {
    pub elapsed_ns: u64,
    pub counts: PartialCounts,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub exit_status: i32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub multiplexed: Vec<EventKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub not_counted: Vec<EventKind>,
}

fn is_zero(v: &i32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureKernel {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_echo: Option<KernelSpec>,
    pub runs: Vec<FixtureRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayFixture {
    pub platform: FixturePlatform,
    pub kernels: Vec<FixtureKernel>,
}

impl ReplayFixture {
    pub fn parse(text: &str, path: &Path) -> Result<ReplayFixture, ReplayError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let fixture: ReplayFixture = serde_path_to_error::deserialize(de).map_err(|e| ReplayError::Schema {
            path: path.to_path_buf(),
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if let Err(e) = VectorConfig::new(fixture.platform.vlen) {
            return Err(ReplayError::Invalid {
                path: path.to_path_buf(),
                message: e.to_string(),
            });
        }
        Ok(fixture)
    }

    /// Read a fixture file, or `samples.json` inside a results directory.
    pub fn load(path: &Path) -> Result<ReplayFixture, ReplayError> {
        let file = if path.is_dir() { path.join(SAMPLES_FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).map_err(|source| ReplayError::Io {
            path: file.clone(),
            source,
        })?;
        Self::parse(&text, &file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }

    pub fn vector_config(&self) -> VectorConfig {
        let cfg = VectorConfig::new(self.platform.vlen).expect("validated on load");
        match self.platform.clock_hz {
            Some(hz) => cfg.with_clock_hz(hz),
            None => cfg,
        }
    }

    /// All runs flattened in file order, with 1-based run indices per kernel.
    pub fn samples(&self) -> Vec<RawSample> {
        self.kernels
            .iter()
            .flat_map(|k| {
                k.runs.iter().enumerate().map(move |(i, r)| RawSample {
                    kernel_name: k.name.clone(),
                    run_index: i as u32 + 1,
                    elapsed_ns: r.elapsed_ns,
                    counts: r.counts,
                    exit_status: r.exit_status,
                    multiplexed: r.multiplexed.clone(),
                    not_counted: r.not_counted.clone(),
                })
            })
            .collect()
    }

    pub fn kernel(&self, name: &str) -> Option<&FixtureKernel> {
        self.kernels.iter().find(|k| k.name == name)
    }

    /// Build a fixture from samples grouped by kernel, in first-seen order.
    pub fn from_samples(platform: FixturePlatform, specs: &[KernelSpec], samples: &[RawSample]) -> ReplayFixture {
        let mut kernels: Vec<FixtureKernel> = Vec::new();
        for s in samples {
            let run = FixtureRun {
                elapsed_ns: s.elapsed_ns,
                counts: s.counts,
                exit_status: s.exit_status,
                multiplexed: s.multiplexed.clone(),
                not_counted: s.not_counted.clone(),
            };
            match kernels.iter_mut().find(|k| k.name == s.kernel_name) {
                Some(k) => k.runs.push(run),
                None => kernels.push(FixtureKernel {
                    name: s.kernel_name.clone(),
                    spec_echo: specs.iter().find(|sp| sp.name == s.kernel_name).cloned(),
                    runs: vec![run],
                }),
            }
        }
        ReplayFixture { platform, kernels }
    }

    /// Static references for every kernel with a spec echo, regenerated for
    /// the fixture platform.
    pub fn references(&self) -> Result<Vec<CalibrationReference>, ReplayError> {
        let cfg = self.vector_config();
        self.kernels
            .iter()
            .map(|k| {
                let spec = k.spec_echo.as_ref().ok_or_else(|| ReplayError::NoSpec { kernel: k.name.clone() })?;
                let fail = |message: String| ReplayError::Reference {
                    kernel: k.name.clone(),
                    message,
                };
                let module = generate_kernel(spec, &cfg).map_err(|e| fail(e.to_string()))?;
                let parsed = parse_kernel(&module.text).map_err(|e| fail(e.to_string()))?;
                let counts =
                    predict_counts(&parsed, spec.iterations).map_err(|e: RefModelError| fail(e.to_string()))?;
                Ok(CalibrationReference::from_reference_counts(&k.name, &counts))
            })
            .collect()
    }
}

/// Samples from a fixture file or results directory.
pub fn load_replay(path: &Path) -> Result<Vec<RawSample>, ReplayError> {
    Ok(ReplayFixture::load(path)?.samples())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"{
        "platform": {"vlen": 256, "clock_hz": 1.8e9},
        "kernels": [
            {"name": "k", "runs": [
                {"elapsed_ns": 10, "counts": {"retired": 5, "vec_ld": 1}},
                {"elapsed_ns": 11, "counts": {"retired": 6}}
            ]}
        ]
    }"#;

    #[test]
    fn samples_keep_order_and_index_runs_from_one() {
        let s = ReplayFixture::parse(TINY, Path::new("t.json")).unwrap().samples();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].run_index, s[0].elapsed_ns, s[0].counts.vec_ld), (1, 10, Some(1)));
        assert_eq!((s[1].run_index, s[1].counts.retired, s[1].counts.vec_ld), (2, Some(6), None));
    }

    #[test]
    fn negative_count_names_the_field() {
        let bad = TINY.replace("\"retired\": 6", "\"retired\": -6");
        let err = ReplayFixture::parse(&bad, Path::new("t.json")).unwrap_err();
        match err {
            ReplayError::Schema { field, .. } => assert_eq!(field, "kernels[0].runs[1].counts.retired"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn invalid_vlen_is_rejected() {
        let bad = TINY.replace("256", "300");
        assert!(matches!(
            ReplayFixture::parse(&bad, Path::new("t.json")),
            Err(ReplayError::Invalid { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let f = ReplayFixture::parse(TINY, Path::new("t.json")).unwrap();
        let back = ReplayFixture::parse(&f.to_json(), Path::new("t.json")).unwrap();
        assert_eq!(f, back);
        let rebuilt = ReplayFixture::from_samples(f.platform, &[], &f.samples());
        assert_eq!(rebuilt, f);
    }
}
