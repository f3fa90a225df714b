#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "microlisp/evaluator.hpp"
#include "microlisp/heap.hpp"

namespace microlisp {

struct RunConfig {
    HeapConfig heap;
    EvalOptions eval;
    bool echo_input = false;  // echo each line after the prompt (piped input)
};

// Prints "minilisp> ", reads one form per line, prints the formatted value or
// a one-line diagnostic, and loops until end of input; the metrics report
// follows. Errors never end the session. Always returns 0.
int run_repl(std::istream& in, std::ostream& out, const RunConfig& config);

// Evaluates all forms in order, printing each result on its own line, then
// the report. The first error aborts: returns 1 for parse/eval errors, 2 for
// OutOfMemory, 0 otherwise. A metrics CSV row is appended to csv_path when
// one is given.
int run_script_text(std::string_view source, std::ostream& out, std::ostream& err,
                    const RunConfig& config, const std::string& csv_path = "");

struct SweepOptions {
    std::vector<size_t> heap_sizes;
    std::vector<CollectorKind> collectors;
    std::string script;  // empty selects the bundled benchmark script
    bool stress_gc = false;
    int depth_limit = 10000;
};

// Runs the script fresh per (collector, heap size) and returns one CSV row
// each. OutOfMemory is recorded in the status column, not thrown.
std::string run_benchmark_sweep(const SweepOptions& options);

// One fresh scripted run; returns the raw timing counters. Errors propagate.
TimingStats measure_script_run(std::string_view script, const HeapConfig& heap_config,
                               int depth_limit = 10000);

// The bundled workload: recursive definitions, dynamic list generation, and
// a higher-order map over a naive fibonacci.
std::string_view benchmark_script();

}  // namespace microlisp
