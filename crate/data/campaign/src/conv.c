/* Direct 3x3 convolution layer stack standing in for CNN inference.
 * Usage: conv [width] [channels] [layers] */
#include <math.h>
#include <stdlib.h>
#include "bench_timer.h"

int main(int argc, char **argv) {
    int w = argc > 1 ? atoi(argv[1]) : 64;
    int ch = argc > 2 ? atoi(argv[2]) : 32;
    int layers = argc > 3 ? atoi(argv[3]) : 8;
    size_t plane = (size_t)w * w;
    float *in = malloc(plane * ch * sizeof *in), *out = malloc(plane * ch * sizeof *out);
    float *wt = malloc((size_t)ch * ch * 9 * sizeof *wt);
    if (!in || !out || !wt) return 1;
    for (size_t i = 0; i < plane * ch; i++) in[i] = 1.0f;
    for (size_t i = 0; i < (size_t)ch * ch * 9; i++) wt[i] = 1.0f / (9.0f * ch);
    uint64_t t0 = bench_now_ns();
    for (int l = 0; l < layers; l++) {
#pragma omp parallel for
        for (int o = 0; o < ch; o++)
            for (int y = 1; y < w - 1; y++)
                for (int x = 1; x < w - 1; x++) {
                    float acc = 0.0f;
                    for (int c = 0; c < ch; c++)
                        for (int ky = -1; ky <= 1; ky++)
                            for (int kx = -1; kx <= 1; kx++)
                                acc += wt[((o * ch + c) * 3 + ky + 1) * 3 + kx + 1] *
                                       in[c * plane + (size_t)(y + ky) * w + x + kx];
                    out[o * plane + (size_t)y * w + x] = acc > 0.0f ? acc : 0.0f;
                }
        for (int c = 0; c < ch; c++)
            for (int y = 1; y < w - 1; y++)
                for (int x = 1; x < w - 1; x++) in[c * plane + (size_t)y * w + x] = out[c * plane + (size_t)y * w + x];
    }
    int ok = fabsf(in[(size_t)(w / 2) * w + w / 2] - 1.0f) < 1e-3f;
    bench_report(t0, ok);
    return ok ? 0 : 1;
}
