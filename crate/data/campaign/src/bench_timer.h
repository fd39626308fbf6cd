/* Monotonic timing helpers shared by the proxy apps. */
#ifndef BENCH_TIMER_H
#define BENCH_TIMER_H
#include <stdint.h>
#include <stdio.h>
#include <time.h>

static inline uint64_t bench_now_ns(void) {
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000u + (uint64_t)ts.tv_nsec;
}

static inline void bench_report(uint64_t start, int ok) {
    printf("elapsed_ns=%llu\n", (unsigned long long)(bench_now_ns() - start));
    printf("result: %s\n", ok ? "OK" : "FAIL");
}
#endif
