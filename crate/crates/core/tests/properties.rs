use proptest::prelude::*;

use rvvprobe_core::events::EventKind;
use rvvprobe_core::kernelgen::{generate_kernel, GenError, KernelSpec, Pattern};
use rvvprobe_core::refmodel::{parse_kernel, predict_counts};
use rvvprobe_core::sim::run_module;
use rvvprobe_core::vtype::{compute_vlmax, Lmul, Policy, Sew, VectorConfig};

fn vlen() -> impl Strategy<Value = u32> {
    (7u32..=14).prop_map(|p| 1 << p)
}

fn lmul() -> impl Strategy<Value = Lmul> {
    prop::sample::select(Lmul::INTEGRAL.to_vec())
}

fn sew() -> impl Strategy<Value = Sew> {
    prop::sample::select(Sew::ALL.to_vec())
}

fn policy() -> impl Strategy<Value = Policy> {
    prop::sample::select(vec![Policy::Agnostic, Policy::Undisturbed])
}

/// A spec that is valid by construction for a given VLEN.
fn valid_spec(vlen: u32) -> impl Strategy<Value = KernelSpec> {
    let cfg = VectorConfig::new(vlen).unwrap();
    (sew(), lmul(), 0usize..9, 1u32..=4, 1u32..=3, 1u64..=u32::MAX as u64, policy(), policy(), any::<u32>())
        .prop_map(move |(sew, lmul, which, mult, stride_pow, active_seed, tp, mp, pick)| {
            let vw = |p: &str| format!("{p}{}.v", sew.bits());
            let vlmax = compute_vlmax(&cfg, sew, lmul).unwrap();
            let groups = 32 / lmul.group_regs();
            let masked_groups = 16 / lmul.group_regs();
            let mut spec = match which {
                0 => KernelSpec::new(&vw("vle"), sew, lmul, Pattern::UnitLoad).with_unroll(groups * mult),
                1 => KernelSpec::new(&vw("vse"), sew, lmul, Pattern::UnitStore).with_unroll(groups * mult),
                2 => KernelSpec::new(&vw("vlse"), sew, lmul, Pattern::StridedLoad)
                    .with_stride(1 << stride_pow)
                    .with_unroll(groups * mult),
                3 => KernelSpec::new(&vw("vsse"), sew, lmul, Pattern::StridedStore)
                    .with_stride(stride_pow)
                    .with_unroll(groups * mult),
                4 => {
                    // Both are powers of two, so the larger is their least common multiple.
                    let s = (1u32 << stride_pow).min(vlmax as u32);
                    let cycle = masked_groups.max(s);
                    KernelSpec::new(&vw("vle"), sew, lmul, Pattern::MaskedUnitLoad)
                        .with_stride(s)
                        .with_unroll(cycle * mult)
                }
                5 | 6 => {
                    let active = (active_seed % vlmax) as u32 + 1;
                    let p = if which == 5 { Pattern::TailVlLoad } else { Pattern::TailMaskLoad };
                    let rot = if which == 5 { groups } else { masked_groups };
                    KernelSpec::new(&vw("vle"), sew, lmul, p).with_active(active).with_unroll(rot * mult)
                }
                7 => {
                    let ops: &[&str] = if sew == Sew::E8 {
                        &["vadd.vv", "vmul.vv", "vmacc.vv", "vdiv.vv"]
                    } else {
                        &["vadd.vv", "vmul.vv", "vmacc.vv", "vdiv.vv", "vfadd.vv", "vfmul.vv", "vfmacc.vv", "vfdiv.vv"]
                    };
                    let m = ops[pick as usize % ops.len()];
                    KernelSpec::new(m, sew, lmul, Pattern::Arith).with_unroll(groups * mult)
                }
                _ => {
                    let scalar: [(&str, Sew, u32); 8] = [
                        ("lb", Sew::E8, 8),
                        ("sh", Sew::E16, 8),
                        ("lw", Sew::E32, 8),
                        ("sd", Sew::E64, 8),
                        ("flw", Sew::E32, 16),
                        ("fsd", Sew::E64, 16),
                        ("fmadd.d", Sew::E64, 16),
                        ("div", Sew::E64, 8),
                    ];
                    let (m, w, c) = scalar[pick as usize % scalar.len()];
                    KernelSpec::new(m, w, Lmul::M1, Pattern::ScalarRef)
                        .with_stride(stride_pow)
                        .with_unroll(c * mult)
                }
            };
            spec.tail_policy = tp;
            spec.mask_policy = mp;
            spec.iterations = active_seed;
            spec
        })
}

fn case() -> impl Strategy<Value = (VectorConfig, KernelSpec)> {
    vlen().prop_flat_map(|v| (Just(VectorConfig::new(v).unwrap()), valid_spec(v)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn generated_kernels_satisfy_static_invariants((cfg, spec) in case()) {
        let module = generate_kernel(&spec, &cfg).unwrap();
        prop_assert_eq!(&generate_kernel(&spec, &cfg).unwrap().text, &module.text);
        prop_assert_eq!(module.buffer_bytes % 64, 0);
        let k = parse_kernel(&module.text).unwrap();
        prop_assert_eq!(k.target_inst.as_str(), spec.target_inst.as_str());

        let n = spec.iterations;
        let r = predict_counts(&k, n).unwrap();
        prop_assert_eq!(r.target_inst_count, n * spec.unroll as u64);
        let c = r.counts;
        prop_assert!(c.vec_ld + c.vec_st <= c.vec);
        prop_assert!(c.fp_ld + c.fp_st <= c.fp);
        for e in EventKind::ALL {
            prop_assert!(c[e] <= c.retired);
        }

        let control = k.body().len() as u64 - spec.unroll as u64;
        prop_assert!(control <= 4);
        let prologue = k.prologue_counts().retired + k.epilogue_counts().retired;
        prop_assert!(c.retired <= n * (spec.unroll as u64 + 4) + prologue);

        let twice = predict_counts(&k, 2 * n).unwrap();
        for e in EventKind::ALL {
            prop_assert_eq!(twice.counts[e] - c[e], n * k.body_counts()[e]);
        }

        if let Some(d) = k.min_dependency_distance() {
            prop_assert!(d >= 2, "dependency distance {d}");
        }
    }

    #[test]
    fn simulator_agrees_with_reference_model((cfg, spec) in case(), iterations in 1u64..=4) {
        let module = generate_kernel(&spec, &cfg).unwrap();
        let k = parse_kernel(&module.text).unwrap();
        let predicted = predict_counts(&k, iterations).unwrap();
        let run = run_module(&module, &cfg, iterations).unwrap();
        prop_assert_eq!(predicted.counts, run.stats.counts);
        prop_assert_eq!(predicted.target_inst_count, run.stats.target_inst_count);
    }

    #[test]
    fn out_of_range_active_is_rejected(v in vlen(), extra in 1u32..100) {
        let cfg = VectorConfig::new(v).unwrap();
        let vlmax = compute_vlmax(&cfg, Sew::E8, Lmul::M1).unwrap() as u32;
        let spec = KernelSpec::new("vle8.v", Sew::E8, Lmul::M1, Pattern::TailVlLoad).with_active(vlmax + extra);
        let rejected = matches!(generate_kernel(&spec, &cfg), Err(GenError::ActiveOutOfRange { .. }));
        prop_assert!(rejected);
    }

    #[test]
    fn unroll_off_the_rotation_cycle_is_rejected(l in lmul(), unroll in 1u32..512) {
        let cfg = VectorConfig::new(256).unwrap();
        let cycle = 32 / l.group_regs();
        prop_assume!(unroll % cycle != 0);
        let spec = KernelSpec::new("vfadd.vv", Sew::E32, l, Pattern::Arith).with_unroll(unroll);
        let rejected = matches!(generate_kernel(&spec, &cfg), Err(GenError::Unroll { .. }));
        prop_assert!(rejected);
    }
}
