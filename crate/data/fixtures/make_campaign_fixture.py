#!/usr/bin/env python3
"""Write campaign_jupiter.json, a replay fixture for campaign runs.

Each job's runtime and retired count are written as ratios against the
app's gcc nonvec baseline. Some ratios, and the qsim runtimes, are hardware
measurements. The remaining ratios and every other absolute scale are
illustrative, so the jobs are flagged that way.

Usage: python3 make_campaign_fixture.py [output.json]
"""

import json
import sys

PLATFORM = {"name": "milkv-jupiter", "vlen": 256}
LMULS = (1, 2, 4, 8)
RUNS = 5
# Symmetric spread so the mean of the runs equals the nominal runtime.
JITTER = (-0.002, -0.001, 0.0, 0.001, 0.002)

# Baseline scale per app: (runtime seconds, retired instructions).
BASE = {
    "sgemm": (12.0, 6.0e10),
    "dgemm": (14.0, 6.4e10),
    "stream": (6.0, 2.2e10),
    "spmv": (5.0, 1.8e10),
    "alexnet": (20.0, 9.0e10),
    "yolov3": (30.0, 1.3e11),
    "qsim": (18.3, 1.5e11),
}

# (speedup, reduction) against gcc nonvec for the default jobs, then one pair
# per LMUL level in LMULS order.
RATIOS = {
    "sgemm": {
        "gcc": {"nonvec": (1.0, 1.0), "autovec": (1.85, 3.6),
                "lmul": [(1.85, 3.6), (1.93, 4.0), (2.0, 4.3), (1.9, 4.5)]},
        "clang": {"nonvec": (0.96, 0.9), "autovec": (2.4, 4.7),
                  "lmul": [(2.3, 4.4), (2.35, 4.7), (1.6, 5.0), (0.85, 5.2)]},
    },
    "dgemm": {
        "gcc": {"nonvec": (1.0, 1.0), "autovec": (1.4, 2.0),
                "lmul": [(1.4, 2.0), (1.5, 2.3), (1.6, 2.6), (1.5, 2.8)]},
        "clang": {"nonvec": (0.95, 0.9), "autovec": (1.7, 2.4),
                  "lmul": [(1.65, 2.3), (1.7, 2.4), (1.3, 2.6), (0.9, 2.7)]},
    },
    "stream": {
        "gcc": {"nonvec": (1.0, 1.0), "autovec": (1.0, 2.2),
                "lmul": [(1.0, 2.2), (1.0, 2.4), (0.98, 2.5), (0.95, 2.6)]},
        "clang": {"nonvec": (0.95, 0.9), "autovec": (0.76, 2.8),
                  "lmul": [(0.78, 2.7), (0.76, 2.8), (0.74, 2.9), (0.7, 3.0)]},
    },
    "spmv": {
        "gcc": {"nonvec": (1.0, 1.0), "autovec": (1.0, 1.02),
                "lmul": [(1.0, 1.02), (0.99, 1.03), (0.97, 1.03), (0.95, 1.04)]},
        "clang": {"nonvec": (0.97, 0.95), "autovec": (0.97, 0.96),
                  "lmul": [(0.97, 0.96), (0.96, 0.96), (0.95, 0.97), (0.93, 0.97)]},
    },
    "alexnet": {
        "gcc": {"nonvec": (1.0, 1.0), "autovec": (1.45, 1.6),
                "lmul": [(1.43, 1.6), (1.45, 1.9), (1.44, 2.2), (1.42, 2.5)]},
        "clang": {"nonvec": (0.95, 0.9), "autovec": (1.2, 1.7),
                  "lmul": [(1.2, 1.7), (1.21, 1.8), (1.19, 1.85), (1.18, 1.9)]},
    },
    "yolov3": {
        "gcc": {"nonvec": (1.0, 1.0), "autovec": (1.2, 3.9),
                "lmul": [(1.2, 3.3), (1.21, 6.5), (1.2, 9.8), (1.2, 13.1)]},
        "clang": {"nonvec": (0.95, 0.9), "autovec": (1.15, 4.3),
                  "lmul": [(1.15, 4.3), (1.16, 4.5), (1.15, 4.6), (1.14, 4.7)]},
    },
}

# Qsim: absolute runtimes in seconds, and retired counts relative to gcc nonvec.
QSIM = {
    ("gcc", "nonvec"): (18.3, 1.0),
    ("gcc", "autovec"): (18.3, 1.0),
    ("gcc", "intrinsics"): (19.0, 1 / 1.4),
    ("clang", "nonvec"): (39.4, 1.25 * 1.3 / 1.4),
    ("clang", "autovec"): (39.4, 1.25 * 1.3 / 1.4),
    ("clang", "intrinsics"): (24.6, 1.25 / 1.4),
}


def mix(retired, vectorised):
    """Illustrative load/store breakdown that always sums below retired."""
    r = int(round(retired))
    if vectorised:
        parts = {"vec_ld": 0.25, "vec_st": 0.08, "fp_ld": 0.05, "fp_st": 0.02, "vec": 0.5, "fp": 0.2}
    else:
        parts = {"vec_ld": 0.0, "vec_st": 0.0, "fp_ld": 0.30, "fp_st": 0.10, "vec": 0.0, "fp": 0.35}
    counts = {"retired": r}
    for k, f in parts.items():
        counts[k] = int(round(r * f)) if f else 16
    return counts


def job(job_id, runtime_s, retired, vectorised):
    runtime_ns = runtime_s * 1e9
    counts = mix(retired, vectorised)
    runs = [{"elapsed_ns": int(round(runtime_ns * (1 + j))), "counts": counts} for j in JITTER[:RUNS]]
    return {"id": job_id, "stdout": "result: OK\n", "illustrative": True, "runs": runs}


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "campaign_jupiter.json"
    jobs = []
    for app, per_cc in RATIOS.items():
        base_rt, base_ret = BASE[app]
        for cc, modes in per_cc.items():
            for mode in ("nonvec", "autovec"):
                s, r = modes[mode]
                jobs.append(job(f"{app}/{cc}/{mode}", base_rt / s, base_ret / r, mode != "nonvec"))
            for lmul, (s, r) in zip(LMULS, modes["lmul"]):
                jobs.append(job(f"{app}/{cc}/autovec/lmul{lmul}", base_rt / s, base_ret / r, True))
    _, qret = BASE["qsim"]
    for cc in ("gcc", "clang"):
        for mode in ("nonvec", "autovec", "intrinsics"):
            rt, rel = QSIM[(cc, mode)]
            jobs.append(job(f"qsim/{cc}/{mode}", rt, qret * rel, mode == "intrinsics"))
        # The compiler leaves qsim scalar whatever LMUL it is offered.
        rt, rel = QSIM[(cc, "autovec")]
        for lmul in LMULS:
            jobs.append(job(f"qsim/{cc}/autovec/lmul{lmul}", rt, qret * rel, False))
    with open(out, "w") as f:
        json.dump({"platform": PLATFORM, "jobs": jobs}, f, indent=1)
        f.write("\n")
    print(f"wrote {out} ({len(jobs)} jobs)")


if __name__ == "__main__":
    main()
