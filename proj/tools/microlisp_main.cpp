#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "microlisp/driver.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream stream(text);
    std::string part;
    while (std::getline(stream, part, ',')) {
        if (!part.empty()) parts.push_back(part);
    }
    return parts;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MicroLisp interpreter with swappable stop-the-world garbage collectors"};

    std::string gc_name = "cheney";
    size_t heap_bytes = 10240;
    std::string script_path;
    std::string stats_csv;
    std::string sizes_text = "8192,10240,12288,15360";
    std::string collectors_text = "mark-sweep,cheney,lisp2";
    bool bench = false;
    bool stress = false;
    bool validate = false;
    int depth_limit = 10000;

    app.add_option("--gc", gc_name, "Collector: mark-sweep, cheney, or lisp2")
        ->capture_default_str();
    app.add_option("--heap-bytes", heap_bytes,
                   "Total arena size in bytes. Under cheney this covers both "
                   "semispaces, so the mutator sees half of it.")
        ->capture_default_str();
    app.add_option("--script", script_path, "Evaluate a file of forms instead of the REPL");
    app.add_flag("--bench", bench, "Sweep (collector, heap size) pairs and emit CSV");
    app.add_option("--sizes", sizes_text, "Comma-separated heap sizes in bytes for --bench")
        ->capture_default_str();
    app.add_option("--collectors", collectors_text, "Comma-separated collectors for --bench")
        ->capture_default_str();
    app.add_option("--stats-csv", stats_csv, "Write the metrics CSV to this path");
    app.add_flag("--stress-gc", stress, "Collect before every allocation");
    app.add_option("--depth-limit", depth_limit, "Maximum active applications")
        ->capture_default_str();
    app.add_flag("--validate-gc", validate, "Audit the whole heap after every collection");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    auto collector = microlisp::collector_from_string(gc_name);
    if (!collector) {
        std::cerr << "error: unknown collector '" << gc_name << "'\n";
        return 3;
    }

    if (bench) {
        microlisp::SweepOptions sweep;
        for (const std::string& size_text : split_commas(sizes_text)) {
            try {
                sweep.heap_sizes.push_back(std::stoull(size_text));
            } catch (const std::exception&) {
                std::cerr << "error: bad heap size '" << size_text << "'\n";
                return 3;
            }
        }
        for (const std::string& name : split_commas(collectors_text)) {
            auto kind = microlisp::collector_from_string(name);
            if (!kind) {
                std::cerr << "error: unknown collector '" << name << "'\n";
                return 3;
            }
            sweep.collectors.push_back(*kind);
        }
        if (sweep.heap_sizes.empty() || sweep.collectors.empty()) {
            std::cerr << "error: --bench needs at least one size and one collector\n";
            return 3;
        }
        sweep.stress_gc = stress;
        sweep.depth_limit = depth_limit;
        if (!script_path.empty()) {
            std::ifstream file(script_path);
            if (!file) {
                std::cerr << "error: cannot open script '" << script_path << "'\n";
                return 3;
            }
            std::stringstream buffer;
            buffer << file.rdbuf();
            sweep.script = buffer.str();
        }
        std::string csv = microlisp::run_benchmark_sweep(sweep);
        if (stats_csv.empty()) {
            std::cout << csv;
        } else {
            std::ofstream out(stats_csv);
            out << csv;
        }
        return 0;
    }

    microlisp::RunConfig config;
    config.heap.capacity_bytes = heap_bytes;
    config.heap.collector = *collector;
    config.heap.stress_gc = stress;
    config.heap.validate_after_gc = validate;
    config.eval.depth_limit = depth_limit;

    try {
        if (!script_path.empty()) {
            std::ifstream file(script_path);
            if (!file) {
                std::cerr << "error: cannot open script '" << script_path << "'\n";
                return 3;
            }
            std::stringstream buffer;
            buffer << file.rdbuf();
            return microlisp::run_script_text(buffer.str(), std::cout, std::cerr, config,
                                              stats_csv);
        }
        config.echo_input = isatty(STDIN_FILENO) == 0;
        return microlisp::run_repl(std::cin, std::cout, config);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
