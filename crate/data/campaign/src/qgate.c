/* Single-qubit gate sweeps over an interleaved complex state vector.
 * Build with -DUSE_RVV for the intrinsics path. Usage: qgate [qubits] [sweeps] */
#include <math.h>
#include <stdlib.h>
#include "bench_timer.h"
#ifdef USE_RVV
#include <riscv_vector.h>
#endif

/* Apply the 2x2 real-valued gate {{g0, g1}, {g2, g3}} to qubit q. */
static void apply(float *s, long dim, int q, const float g[4]) {
    long stride = 1L << q;
#pragma omp parallel for
    for (long base = 0; base < dim; base += 2 * stride) {
#ifdef USE_RVV
        for (long i = 0; i < stride;) {
            size_t vl = __riscv_vsetvl_e32m1((size_t)(stride - i) * 2);
            float *p0 = s + 2 * (base + i), *p1 = s + 2 * (base + i + stride);
            vfloat32m1_t a = __riscv_vle32_v_f32m1(p0, vl), b = __riscv_vle32_v_f32m1(p1, vl);
            vfloat32m1_t na = __riscv_vfmacc_vf_f32m1(__riscv_vfmul_vf_f32m1(a, g[0], vl), g[1], b, vl);
            vfloat32m1_t nb = __riscv_vfmacc_vf_f32m1(__riscv_vfmul_vf_f32m1(a, g[2], vl), g[3], b, vl);
            __riscv_vse32_v_f32m1(p0, na, vl);
            __riscv_vse32_v_f32m1(p1, nb, vl);
            i += (long)vl / 2;
        }
#else
        for (long i = 0; i < stride; i++)
            for (int part = 0; part < 2; part++) {
                float *p0 = s + 2 * (base + i) + part, *p1 = s + 2 * (base + i + stride) + part;
                float a = *p0, b = *p1;
                *p0 = g[0] * a + g[1] * b;
                *p1 = g[2] * a + g[3] * b;
            }
#endif
    }
}

int main(int argc, char **argv) {
    int qubits = argc > 1 ? atoi(argv[1]) : 22;
    int sweeps = argc > 2 ? atoi(argv[2]) : 4;
    long dim = 1L << qubits;
    float *s = calloc((size_t)dim * 2, sizeof *s);
    if (!s) return 1;
    s[0] = 1.0f;
    const float h = (float)M_SQRT1_2, hadamard[4] = {h, h, h, -h};
    uint64_t t0 = bench_now_ns();
    /* Two Hadamard sweeps restore the initial state. */
    for (int r = 0; r < 2 * sweeps; r++)
        for (int q = 0; q < qubits; q++) apply(s, dim, q, hadamard);
    int ok = fabsf(s[0] - 1.0f) < 1e-3f;
    bench_report(t0, ok);
    return ok ? 0 : 1;
}
