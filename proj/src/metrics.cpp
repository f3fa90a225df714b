#include "microlisp/metrics.hpp"

#include <chrono>
#include <sstream>

#if defined(__x86_64__)
#include <x86intrin.h>
#endif

namespace microlisp {

namespace detail {

uint64_t steady_now_ns() {
    return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                     std::chrono::steady_clock::now().time_since_epoch())
                                     .count());
}

#if defined(__x86_64__)
namespace {

// Nanoseconds per TSC tick, measured once against steady_clock at load.
double calibrate_ns_per_tick() {
    uint64_t tick0 = __rdtsc();
    uint64_t ns0 = steady_now_ns();
    uint64_t ns1 = ns0;
    while (ns1 - ns0 < 10'000'000) ns1 = steady_now_ns();
    uint64_t tick1 = __rdtsc();
    return static_cast<double>(ns1 - ns0) / static_cast<double>(tick1 - tick0);
}

}  // namespace

const double kNsPerTscTick = calibrate_ns_per_tick();
#endif

}  // namespace detail

std::string render_report(const TimingStats& stats) {
    std::ostringstream out;
    out << "ALLOC TIME: " << stats.alloc_total_ns << "\n"
        << "TOTAL ALLOCATIONS: " << stats.alloc_count << "\n"
        << "AVG ALLOCATION TIME: " << stats.avg_allocation_ns() << "\n"
        << "GC TIME: " << stats.gc_total_ns << "\n"
        << "TOTAL GC COLLECTIONS: " << stats.gc_count << "\n"
        << "AVG GC TIME: " << stats.avg_collection_ns() << "\n";
    return out.str();
}

std::string csv_header() {
    return "heap_bytes,collector,avg_alloc_ns,avg_gc_ns,gc_count,alloc_count,status\n";
}

std::string csv_row(size_t heap_bytes, const std::string& collector,
                    const TimingStats& stats, const std::string& status) {
    std::ostringstream out;
    out << heap_bytes << ',' << collector << ',' << stats.avg_allocation_ns() << ','
        << stats.avg_collection_ns() << ',' << stats.gc_count << ',' << stats.alloc_count
        << ',' << status << "\n";
    return out.str();
}

}  // namespace microlisp
