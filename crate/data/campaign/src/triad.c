/* STREAM-style triad a[i] = b[i] + s * c[i]. Usage: triad [n] [reps] */
#include <math.h>
#include <stdlib.h>
#include "bench_timer.h"

int main(int argc, char **argv) {
    long n = argc > 1 ? atol(argv[1]) : 1 << 22;
    int reps = argc > 2 ? atoi(argv[2]) : 20;
    double *a = malloc(n * sizeof *a), *b = malloc(n * sizeof *b), *c = malloc(n * sizeof *c);
    if (!a || !b || !c) return 1;
    for (long i = 0; i < n; i++) { b[i] = 1.0; c[i] = 2.0; }
    const double s = 3.0;
    uint64_t t0 = bench_now_ns();
    for (int r = 0; r < reps; r++) {
#pragma omp parallel for
        for (long i = 0; i < n; i++) a[i] = b[i] + s * c[i];
    }
    int ok = 1;
    for (long i = 0; i < n; i++) ok &= fabs(a[i] - 7.0) < 1e-12;
    bench_report(t0, ok);
    return ok ? 0 : 1;
}
