#include "microlisp/driver.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "microlisp/metrics.hpp"
#include "microlisp/reader.hpp"

namespace microlisp {

namespace {

constexpr std::string_view kBenchmarkScript = R"LISP((QUOTE A)
(QUOTE (A B C))
(CAR (QUOTE (A B C)))
(CDR (QUOTE (A B C)))
(CONS (QUOTE A) (QUOTE (B C)))
(= (CAR (QUOTE (A B))) (QUOTE A))
(= (CAR (CDR (QUOTE (A B)))) (QUOTE A))
(CAR (QUOTE (0 1)))
(CDR (CONS (+ 0 1) (+ 2 3)))
(DEFINE foo (+ 0 1))
foo
(DEFINE bar 0)
bar
(+ foo bar)
(COND (#T (+ 0 1)))
(COND ((= foo bar) 7) (#T 9))
(COND ((= (QUOTE A) (QUOTE B)) (QUOTE C)) ((NOT #F) (QUOTE yee)))
((LAMBDA (X) (+ X 1)) 5)
(DEFINE add (LAMBDA (X) (LAMBDA (Y) (+ X Y))))
((add 4) 5)
(DEFINE fac (LAMBDA (N) (COND ((= N 0) 1) (#T (* N (fac (- N 1)))))))
(fac 0)
(fac 10)
(DEFINE range (LAMBDA (LOW HIGH) (COND ((> LOW HIGH) NIL) (#T (CONS LOW (range (+ LOW 1) HIGH))))))
(range 0 100)
(DEFINE map (LAMBDA (f xs) (COND ((= xs NIL) NIL) (#T (CONS (f (CAR xs)) (map f (CDR xs)))))))
(map (LAMBDA (x) (+ x 1)) (range 0 50))
(map (LAMBDA (x) (fac x)) (range 0 15))
(DEFINE fib (LAMBDA (n) (COND ((OR (= n 0) (= n 1)) 1) (#T (+ (fib (- n 1)) (fib (- n 2)))))))
(map (LAMBDA (x) (fib x)) (range 0 20))
)LISP";

// Parses and evaluates one form at a time so a script never holds more than
// the form in flight.
void eval_forms(Heap& heap, Interpreter& interp, std::string_view source, std::ostream* out) {
    Parser parser(tokenize(source), heap);
    while (!parser.at_end()) {
        RootScope scope(heap);
        Rooted form = scope.root(parser.parse_form());
        Rooted value = scope.root(interp.eval_top(form.get()));
        if (out) *out << interp.format_value(value.get()) << "\n";
    }
}

void append_csv(const std::string& path, size_t heap_bytes, CollectorKind collector,
                const TimingStats& stats, const std::string& status) {
    if (path.empty()) return;
    std::ofstream file(path, std::ios::app);
    file.seekp(0, std::ios::end);
    if (file.tellp() == 0) file << csv_header();
    file << csv_row(heap_bytes, to_string(collector), stats, status);
}

}  // namespace

std::string_view benchmark_script() { return kBenchmarkScript; }

int run_repl(std::istream& in, std::ostream& out, const RunConfig& config) {
    Heap heap(config.heap);
    Interpreter interp(heap, config.eval);
    std::string line;
    while (true) {
        if (config.echo_input) {
            if (!std::getline(in, line)) break;
            out << "minilisp> " << line << "\n";
        } else {
            out << "minilisp> " << std::flush;
            if (!std::getline(in, line)) {
                out << "\n";
                break;
            }
        }
        try {
            bool found = false;
            RootScope scope(heap);
            Rooted form = scope.root(parse_single(line, heap, found));
            if (!found) continue;
            Rooted value = scope.root(interp.eval_top(form.get()));
            out << interp.format_value(value.get()) << "\n";
        } catch (const ParseError& e) {
            out << "error: " << e.what() << "\n";
        } catch (const EvalError& e) {
            out << "error: " << e.what() << "\n";
        } catch (const OutOfMemory& e) {
            out << "error: " << e.what() << "\n";
        }
    }
    out << render_report(heap.stats());
    return 0;
}

int run_script_text(std::string_view source, std::ostream& out, std::ostream& err,
                    const RunConfig& config, const std::string& csv_path) {
    Heap heap(config.heap);
    Interpreter interp(heap, config.eval);
    try {
        eval_forms(heap, interp, source, &out);
    } catch (const OutOfMemory& e) {
        err << "error: " << e.what() << "\n";
        append_csv(csv_path, config.heap.capacity_bytes, config.heap.collector, heap.stats(),
                   "oom");
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const EvalError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    out << render_report(heap.stats());
    append_csv(csv_path, config.heap.capacity_bytes, config.heap.collector, heap.stats(), "ok");
    return 0;
}

TimingStats measure_script_run(std::string_view script, const HeapConfig& heap_config,
                               int depth_limit) {
    Heap heap(heap_config);
    Interpreter interp(heap, EvalOptions{depth_limit});
    std::ostringstream sink;
    eval_forms(heap, interp, script, &sink);
    return heap.stats();
}

std::string run_benchmark_sweep(const SweepOptions& options) {
    std::string script =
        options.script.empty() ? std::string(benchmark_script()) : options.script;
    std::string csv = csv_header();
    for (CollectorKind collector : options.collectors) {
        for (size_t bytes : options.heap_sizes) {
            HeapConfig heap_config;
            heap_config.capacity_bytes = bytes;
            heap_config.collector = collector;
            heap_config.stress_gc = options.stress_gc;
            std::string status = "ok";
            TimingStats stats;
            try {
                Heap heap(heap_config);
                Interpreter interp(heap, EvalOptions{options.depth_limit});
                try {
                    std::ostringstream sink;
                    eval_forms(heap, interp, script, &sink);
                } catch (const OutOfMemory&) {
                    status = "oom";
                } catch (const std::exception&) {
                    status = "error";
                }
                stats = heap.stats();
            } catch (const OutOfMemory&) {
                status = "oom";  // the bootstrap itself did not fit
            } catch (const std::exception&) {
                status = "error";
            }
            csv += csv_row(bytes, to_string(collector), stats, status);
        }
    }
    return csv;
}

}  // namespace microlisp
