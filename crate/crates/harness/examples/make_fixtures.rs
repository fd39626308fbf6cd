//! Regenerates the kernel-sample fixtures under `data/fixtures/`.
//!
//! `cargo run -p rvvprobe-harness --example make_fixtures -- <out-dir>`
//!
//! Counter values in `x60_counters.json` are per-kernel counts measured on a
//! 256-bit X60 core. Throughputs in `jupiter_kernels.json` are Gops/s values
//! measured on the same core, turned into elapsed times with the element-op count of each
//! generated kernel. Ideal counts come from the reference model.

use std::path::PathBuf;

use rvvprobe_core::kernelgen::elements_per_inst;
use rvvprobe_core::{
    generate_kernel, generate_suite, parse_kernel, predict_counts, PartialCounts, Pattern, RawSample, Sew,
    SuiteKind, SuiteOptions, VectorConfig,
};
use rvvprobe_harness::replay::{FixturePlatform, ReplayFixture};

const RUNS: u32 = 5;
const PLATFORM: FixturePlatform = FixturePlatform {
    vlen: 256,
    clock_hz: Some(1.8e9),
};

/// Columns: retired, vec_ld, vec_st, vec, fp_ld, fp_st, fp.
const X60_COUNTS: [(&str, [u64; 7]); 10] = [
    ("flw", [13_100_000_000, 16, 16, 55, 12_800_000_000, 696, 12_800_000_000]),
    ("lw", [13_100_000_000, 16, 16, 53, 736, 855, 1613]),
    ("vle.vv", [13_100_000_000, 12_800_000_000, 17, 12_800_000_000, 662, 738, 2443]),
    ("fsw", [13_100_000_000, 16, 16, 55, 601, 12_800_000_000, 12_800_000_000]),
    ("sw", [13_100_000_000, 16, 16, 53, 736, 855, 1613]),
    ("vse.vv", [13_200_000_000, 1108, 12_800_000_000, 12_800_000_000, 662, 738, 2443]),
    ("vfadd.vv", [13_000_000_000, 124, 17, 12_800_000_000, 652, 726, 25_600_000_000]),
    ("vmacc.vv", [13_000_000_000, 144, 17, 12_800_000_000, 632, 723, 25_600_000_000]),
    ("fadd", [13_000_000_000, 16, 16, 6_400_000_000, 770, 856, 12_800_000_000]),
    ("fmadd", [13_000_000_000, 16, 16, 6_400_000_000, 770, 856, 12_800_000_000]),
];

fn counts(row: [u64; 7]) -> PartialCounts {
    PartialCounts {
        retired: Some(row[0]),
        vec_ld: Some(row[1]),
        vec_st: Some(row[2]),
        vec: Some(row[3]),
        fp_ld: Some(row[4]),
        fp_st: Some(row[5]),
        fp: Some(row[6]),
    }
}

fn counter_fixture(cfg: &VectorConfig) -> ReplayFixture {
    let specs = generate_suite(SuiteKind::Calibration, cfg, &SuiteOptions::default());
    let mut samples = Vec::new();
    for (name, row) in X60_COUNTS {
        // No timing was recorded with these counts; one retired instruction per cycle.
        let elapsed_ns = (row[0] as f64 / PLATFORM.clock_hz.unwrap() * 1e9).round() as u64;
        for run in 1..=RUNS {
            samples.push(RawSample::new(name, run, elapsed_ns, counts(row)));
        }
    }
    ReplayFixture::from_samples(PLATFORM, &specs, &samples)
}

fn mean_gops(pattern: Pattern, sew: Sew, active: Option<u32>) -> Option<f64> {
    let scale = 8.0 / sew.bits() as f64;
    match pattern {
        Pattern::UnitLoad => Some(28.4 * scale),
        Pattern::StridedLoad | Pattern::ScalarRef => Some(1.78),
        Pattern::MaskedUnitLoad => Some(9.2 * scale),
        Pattern::TailVlLoad => Some(28.4 * active? as f64 / 32.0),
        Pattern::TailMaskLoad => Some(18.5 * active? as f64 / 32.0),
        _ => None,
    }
}

fn jupiter_kernels(cfg: &VectorConfig) -> ReplayFixture {
    let opts = SuiteOptions::default();
    let mut specs: Vec<_> = generate_suite(SuiteKind::Memory, cfg, &opts)
        .into_iter()
        .filter(|s| s.pattern == Pattern::UnitLoad)
        .collect();
    specs.extend(generate_suite(SuiteKind::StrideCompare, cfg, &opts));
    specs.extend(generate_suite(SuiteKind::TailCompare, cfg, &opts));
    let mut samples = Vec::new();
    for spec in &specs {
        let gops = mean_gops(spec.pattern, spec.sew, spec.active_elems).expect("suite patterns have a rate");
        let ops = spec.iterations * spec.unroll as u64 * elements_per_inst(spec, cfg).expect("valid spec");
        let elapsed_ns = (ops as f64 / gops).round() as u64;
        let module = generate_kernel(spec, cfg).expect("suite specs generate");
        let parsed = parse_kernel(&module.text).expect("generated kernels parse");
        let ideal = predict_counts(&parsed, spec.iterations).expect("counts fit");
        for run in 1..=RUNS {
            samples.push(RawSample::new(&spec.name, run, elapsed_ns, ideal.counts.to_partial()));
        }
    }
    ReplayFixture::from_samples(PLATFORM, &specs, &samples)
}

fn main() {
    let out = std::env::args().nth(1).map_or_else(|| PathBuf::from("data/fixtures"), PathBuf::from);
    std::fs::create_dir_all(&out).expect("create output directory");
    let cfg = VectorConfig::new(PLATFORM.vlen).unwrap().with_clock_hz(PLATFORM.clock_hz.unwrap());
    for (file, fixture) in [("x60_counters.json", counter_fixture(&cfg)), ("jupiter_kernels.json", jupiter_kernels(&cfg))] {
        let path = out.join(file);
        std::fs::write(&path, fixture.to_json() + "\n").expect("write fixture");
        println!("wrote {}", path.display());
    }
}
