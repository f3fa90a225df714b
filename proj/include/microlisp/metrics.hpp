#pragma once

#include <cstdint>
#include <string>

#if defined(__x86_64__)
#include <x86intrin.h>
#endif

namespace microlisp {

// Counters for allocation and collection timing. Allocation durations span
// the entire allocate call, including any collection that ran inside it, so
// gc_total_ns <= alloc_total_ns over a script run.
struct TimingStats {
    uint64_t alloc_total_ns = 0;
    uint64_t alloc_count = 0;
    uint64_t gc_total_ns = 0;
    uint64_t gc_count = 0;

    void record_allocation(uint64_t duration_ns) {
        alloc_total_ns += duration_ns;
        ++alloc_count;
    }
    void record_collection(uint64_t duration_ns) {
        gc_total_ns += duration_ns;
        ++gc_count;
    }

    // Floor division; zero events report an average of 0.
    uint64_t avg_allocation_ns() const {
        return alloc_count == 0 ? 0 : alloc_total_ns / alloc_count;
    }
    uint64_t avg_collection_ns() const {
        return gc_count == 0 ? 0 : gc_total_ns / gc_count;
    }
};

namespace detail {
#if defined(__x86_64__)
extern const double kNsPerTscTick;  // calibrated once at load against steady_clock
#endif
uint64_t steady_now_ns();
}  // namespace detail

// Monotonic timestamp in nanoseconds. On x86-64 this reads the invariant TSC,
// keeping the per-allocation probe cost well under the costs being measured;
// elsewhere it falls back to steady_clock.
inline uint64_t monotonic_now_ns() {
#if defined(__x86_64__)
    return static_cast<uint64_t>(static_cast<double>(__rdtsc()) * detail::kNsPerTscTick);
#else
    return detail::steady_now_ns();
#endif
}

// Six-line end-of-run report, printed after script mode or on REPL exit.
std::string render_report(const TimingStats& stats);

// One row of benchmark output; the header matches column order.
std::string csv_header();
std::string csv_row(size_t heap_bytes, const std::string& collector,
                    const TimingStats& stats, const std::string& status);

}  // namespace microlisp
