/* CSR sparse matrix-vector product over a banded matrix. Usage: spmv [rows] [reps] */
#include <math.h>
#include <stdlib.h>
#include "bench_timer.h"

#define BAND 9

int main(int argc, char **argv) {
    long rows = argc > 1 ? atol(argv[1]) : 1 << 18;
    int reps = argc > 2 ? atoi(argv[2]) : 20;
    long nnz = rows * BAND;
    long *row_ptr = malloc((rows + 1) * sizeof *row_ptr), *col = malloc(nnz * sizeof *col);
    double *val = malloc(nnz * sizeof *val), *x = malloc(rows * sizeof *x), *y = malloc(rows * sizeof *y);
    if (!row_ptr || !col || !val || !x || !y) return 1;
    for (long r = 0; r < rows; r++) {
        row_ptr[r] = r * BAND;
        for (int k = 0; k < BAND; k++) {
            col[r * BAND + k] = (r + k * 37) % rows;
            val[r * BAND + k] = 1.0;
        }
        x[r] = 1.0;
    }
    row_ptr[rows] = nnz;
    uint64_t t0 = bench_now_ns();
    for (int rep = 0; rep < reps; rep++) {
#pragma omp parallel for
        for (long r = 0; r < rows; r++) {
            double acc = 0.0;
            for (long k = row_ptr[r]; k < row_ptr[r + 1]; k++) acc += val[k] * x[col[k]];
            y[r] = acc;
        }
    }
    int ok = 1;
    for (long r = 0; r < rows; r++) ok &= fabs(y[r] - BAND) < 1e-12;
    bench_report(t0, ok);
    return ok ? 0 : 1;
}
