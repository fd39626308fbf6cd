//! Functional equivalence of the alternative access-pattern kernels.

use rvvprobe_core::kernelgen::{generate_kernel, generate_suite, KernelSpec, Pattern, SuiteKind, SuiteOptions};
use rvvprobe_core::sim::{run_kernel_text, SimRun};
use rvvprobe_core::vtype::{compute_vlmax, Lmul, Sew, VectorConfig};

/// Distinct, recognisable element values: element `i` holds `i + 1`.
fn fill(sew: Sew) -> impl FnOnce(&mut [u8]) {
    move |buf: &mut [u8]| {
        let b = sew.bytes();
        for (i, chunk) in buf.chunks_exact_mut(b).enumerate() {
            let v = (i as u64 + 1).to_le_bytes();
            chunk.copy_from_slice(&v[..b]);
        }
    }
}

fn run(spec: &KernelSpec, cfg: &VectorConfig) -> SimRun {
    let module = generate_kernel(spec, cfg).unwrap();
    run_kernel_text(&module.text, cfg, module.buffer_bytes, 1, None, fill(spec.sew)).unwrap()
}

fn elems(run: &SimRun, vreg: u8, sew: Sew, idx: impl Iterator<Item = usize>) -> Vec<u64> {
    idx.map(|i| run.state.velem(vreg, sew, i)).collect()
}

#[test]
fn strided_and_masked_kernels_gather_the_same_elements() {
    for vlen in [128, 256, 512] {
        let cfg = VectorConfig::new(vlen).unwrap();
        let opts = SuiteOptions {
            lmuls: Lmul::INTEGRAL.to_vec(),
            unroll: 128,
            ..SuiteOptions::default()
        };
        let specs = generate_suite(SuiteKind::StrideCompare, &cfg, &opts);
        for strided in specs.iter().filter(|s| s.pattern == Pattern::StridedLoad) {
            let masked = specs
                .iter()
                .find(|s| s.pattern == Pattern::MaskedUnitLoad && s.sew == strided.sew && s.lmul == strided.lmul)
                .unwrap();
            let vl = compute_vlmax(&cfg, strided.sew, strided.lmul).unwrap() as usize;
            let stride = strided.stride_elems as usize;
            let lmul = strided.lmul.group_regs() as u8;

            let a = run(strided, &cfg);
            let mut from_strided = elems(&a, 0, strided.sew, 0..vl);

            let b = run(masked, &cfg);
            let mut from_masked = Vec::new();
            for chunk in 0..stride {
                let vreg = 8 + chunk as u8 * lmul;
                from_masked.extend(elems(&b, vreg, masked.sew, (0..vl).step_by(stride)));
            }
            let wrap = if strided.sew == Sew::E64 { u64::MAX } else { (1u64 << strided.sew.bits()) - 1 };
            let expected: Vec<u64> = (0..vl).map(|i| ((i * stride) as u64 + 1) & wrap).collect();
            assert_eq!(from_strided, expected, "{} vlen {vlen}", strided.name);
            from_strided.sort_unstable();
            from_masked.sort_unstable();
            assert_eq!(from_strided, from_masked, "{} vs {} vlen {vlen}", strided.name, masked.name);
        }
    }
}

#[test]
fn scalar_strided_kernel_touches_the_same_offsets() {
    let cfg = VectorConfig::new(256).unwrap();
    let spec = KernelSpec::new("lw", Sew::E32, Lmul::M1, Pattern::ScalarRef)
        .with_stride(2)
        .with_unroll(8);
    let r = run(&spec, &cfg);
    // t0 receives element 0, t1 element 2, t2 element 4.
    assert_eq!(r.state.x[5], 1);
    assert_eq!(r.state.x[6], 3);
    assert_eq!(r.state.x[7], 5);
}

#[test]
fn tail_vl_and_tail_mask_load_identical_active_elements() {
    for vlen in [128, 256] {
        let cfg = VectorConfig::new(vlen).unwrap();
        let vlmax = compute_vlmax(&cfg, Sew::E8, Lmul::M1).unwrap();
        let specs = generate_suite(SuiteKind::TailCompare, &cfg, &SuiteOptions::default());
        assert_eq!(specs.len() as u64, 2 * vlmax);
        for active in 1..=vlmax as u32 {
            let pick = |p| specs.iter().find(|s| s.pattern == p && s.active_elems == Some(active)).unwrap();
            let by_vl = run(pick(Pattern::TailVlLoad), &cfg);
            let by_mask = run(pick(Pattern::TailMaskLoad), &cfg);
            assert_eq!(by_vl.state.vl(), active as u64);
            assert_eq!(by_mask.state.vl(), vlmax);
            let active_range = || 0..active as usize;
            let a = elems(&by_vl, 0, Sew::E8, active_range());
            let b = elems(&by_mask, 8, Sew::E8, active_range());
            assert_eq!(a, b, "active {active} vlen {vlen}");
            // The data area starts after the 64-byte mask scratch: byte 64 holds 65.
            assert_eq!(a[0], 65);
            // Inactive elements of the masked load are agnostic-filled.
            for i in active as usize..vlmax as usize {
                assert_eq!(by_mask.state.velem(8, Sew::E8, i), 0xff);
            }
        }
    }
}

#[test]
fn simulation_is_deterministic() {
    let cfg = VectorConfig::new(256).unwrap();
    let spec = KernelSpec::new("vfmacc.vv", Sew::E16, Lmul::M2, Pattern::Arith);
    let a = run(&spec, &cfg);
    let b = run(&spec, &cfg);
    assert_eq!(a.state, b.state);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn staged_fp_operands_produce_expected_values() {
    let cfg = VectorConfig::new(256).unwrap();
    // Operands are staged as 1.0, so one trip of vfadd leaves 2.0 in the first group.
    let spec = KernelSpec::new("vfadd.vv", Sew::E32, Lmul::M1, Pattern::Arith).with_unroll(32);
    let r = run(&spec, &cfg);
    assert_eq!(r.state.velem(0, Sew::E32, 0), 2.0f32.to_bits() as u64);
    assert_eq!(r.stats.counts.fp, 0);
}
