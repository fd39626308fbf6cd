/* Naive GEMM C = A * B in REAL precision (float or double). Usage: gemm [n] */
#include <math.h>
#include <stdlib.h>
#include "bench_timer.h"

#ifndef REAL
#define REAL float
#endif

int main(int argc, char **argv) {
    int n = argc > 1 ? atoi(argv[1]) : 512;
    REAL *A = malloc((size_t)n * n * sizeof *A), *B = malloc((size_t)n * n * sizeof *B);
    REAL *C = calloc((size_t)n * n, sizeof *C);
    if (!A || !B || !C) return 1;
    for (long i = 0; i < (long)n * n; i++) { A[i] = 1; B[i] = 2; }
    uint64_t t0 = bench_now_ns();
#pragma omp parallel for
    for (int i = 0; i < n; i++)
        for (int k = 0; k < n; k++) {
            REAL a = A[(long)i * n + k];
            for (int j = 0; j < n; j++) C[(long)i * n + j] += a * B[(long)k * n + j];
        }
    int ok = 1;
    for (long i = 0; i < (long)n * n; i++) ok &= fabs((double)C[i] - 2.0 * n) < 1e-3 * n;
    bench_report(t0, ok);
    return ok ? 0 : 1;
}
