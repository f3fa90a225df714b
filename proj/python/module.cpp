#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "microlisp/driver.hpp"
#include "microlisp/metrics.hpp"
#include "microlisp/reader.hpp"

namespace py = pybind11;
using namespace microlisp;

namespace {

CollectorKind parse_collector(const std::string& name) {
    auto kind = collector_from_string(name);
    if (!kind) throw std::invalid_argument("unknown collector '" + name + "'");
    return *kind;
}

// One heap plus one evaluator, the same pairing the CLI drives.
class Session {
  public:
    Session(size_t heap_bytes, const std::string& collector, bool stress_gc, int depth_limit,
            bool validate_gc) {
        HeapConfig config;
        config.capacity_bytes = heap_bytes;
        config.collector = parse_collector(collector);
        config.stress_gc = stress_gc;
        config.validate_after_gc = validate_gc;
        heap_ = std::make_unique<Heap>(config);
        interp_ = std::make_unique<Interpreter>(*heap_, EvalOptions{depth_limit});
    }

    std::string eval(const std::string& source) {
        bool found = false;
        RootScope scope(*heap_);
        Rooted form = scope.root(parse_single(source, *heap_, found));
        if (!found) throw std::invalid_argument("no expression in input");
        Rooted value = scope.root(interp_->eval_top(form.get()));
        return interp_->format_value(value.get());
    }

    std::vector<std::string> run(const std::string& source) {
        std::vector<std::string> results;
        Parser parser(tokenize(source), *heap_);
        while (!parser.at_end()) {
            RootScope scope(*heap_);
            Rooted form = scope.root(parser.parse_form());
            Rooted value = scope.root(interp_->eval_top(form.get()));
            results.push_back(interp_->format_value(value.get()));
        }
        return results;
    }

    py::dict stats() const {
        const TimingStats& s = heap_->stats();
        py::dict out;
        out["alloc_total_ns"] = s.alloc_total_ns;
        out["alloc_count"] = s.alloc_count;
        out["gc_total_ns"] = s.gc_total_ns;
        out["gc_count"] = s.gc_count;
        out["avg_alloc_ns"] = s.avg_allocation_ns();
        out["avg_gc_ns"] = s.avg_collection_ns();
        return out;
    }

    std::string report() const { return render_report(heap_->stats()); }
    std::string collector() const { return to_string(heap_->config().collector); }
    size_t heap_bytes() const { return heap_->config().capacity_bytes; }
    void collect() { heap_->collect_now(); }
    void validate() const { heap_->validate(); }

  private:
    std::unique_ptr<Heap> heap_;
    std::unique_ptr<Interpreter> interp_;
};

std::string sweep(const std::vector<size_t>& sizes, const std::vector<std::string>& collectors,
                  const std::string& script, bool stress_gc, int depth_limit) {
    SweepOptions options;
    options.heap_sizes = sizes;
    for (const std::string& name : collectors) options.collectors.push_back(parse_collector(name));
    options.script = script;
    options.stress_gc = stress_gc;
    options.depth_limit = depth_limit;
    return run_benchmark_sweep(options);
}

}  // namespace

PYBIND11_MODULE(_microlisp, m) {
    m.doc() = "MicroLisp interpreter with swappable stop-the-world garbage collectors";

    py::register_exception<OutOfMemory>(m, "OutOfMemoryError", PyExc_MemoryError);
    py::register_exception<EvalError>(m, "EvalError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    py::class_<Session>(m, "Session")
        .def(py::init<size_t, const std::string&, bool, int, bool>(),
             py::arg("heap_bytes") = 10240, py::arg("collector") = "cheney",
             py::arg("stress_gc") = false, py::arg("depth_limit") = 10000,
             py::arg("validate_gc") = false)
        .def("eval", &Session::eval, py::arg("source"),
             "Evaluate one form and return its printed value.")
        .def("run", &Session::run, py::arg("source"),
             "Evaluate every form in the source, returning one printed value per form.")
        .def("stats", &Session::stats)
        .def("report", &Session::report)
        .def("collect", &Session::collect, "Force a collection.")
        .def("validate", &Session::validate, "Audit the heap; raises on any violation.")
        .def_property_readonly("collector", &Session::collector)
        .def_property_readonly("heap_bytes", &Session::heap_bytes);

    m.def("benchmark_sweep", &sweep, py::arg("sizes"),
          py::arg("collectors") = std::vector<std::string>{"mark-sweep", "cheney", "lisp2"},
          py::arg("script") = std::string(), py::arg("stress_gc") = false,
          py::arg("depth_limit") = 10000,
          "Run the benchmark script per (collector, heap size) and return CSV.");
    m.def("benchmark_script", [] { return std::string(benchmark_script()); },
          "The bundled benchmark workload.");
    m.def("collectors", [] {
        return std::vector<std::string>{"mark-sweep", "cheney", "lisp2"};
    });
}
