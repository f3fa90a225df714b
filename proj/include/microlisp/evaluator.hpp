#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "microlisp/heap.hpp"

namespace microlisp {

enum class EvalErrorKind {
    UnboundSymbol,
    NotCallable,
    ArityMismatch,
    CarOfNonList,
    CdrOfNonList,
    TypeMismatch,
    DivisionByZero,
    RecursionLimit,
    Malformed,
};

class EvalError : public std::runtime_error {
  public:
    EvalError(EvalErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    EvalErrorKind kind() const { return kind_; }

  private:
    EvalErrorKind kind_;
};

struct EvalOptions {
    int depth_limit = 10000;  // active applications before RecursionLimit
};

// McCarthy-style eval/apply over heap-resident expressions. Environments are
// NIL-terminated association lists of (symbol . value) pairs; the global
// frame is a registry root, so every collector traces and rewrites it with no
// special cases. Every intermediate value is root-protected across any step
// that can allocate, and roots are released the moment a frame stops needing
// them so deep recursion does not pin dead environments.
class Interpreter {
  public:
    explicit Interpreter(Heap& heap, EvalOptions options = {});
    Interpreter(const Interpreter&) = delete;
    Interpreter& operator=(const Interpreter&) = delete;

    // Evaluates a form in the global scope. The caller keeps `form` rooted
    // (or otherwise reachable) for the duration of the call.
    HeapAddress eval_top(HeapAddress form);

    // Integers in decimal, symbols verbatim, #T/#F, NIL, proper lists as
    // "(e1 e2 ... en)", improper chains as dotted pairs. Depth-capped.
    std::string format_value(HeapAddress value) const;

    // Applies a builtin to already-evaluated arguments.
    HeapAddress apply_builtin_op(BuiltinOp op, const std::vector<HeapAddress>& args);

    HeapAddress global_bindings() const { return global_.get(); }
    HeapAddress true_value() const { return true_.get(); }
    HeapAddress false_value() const { return false_.get(); }
    Heap& heap() { return heap_; }

  private:
    struct DepthGuard;

    HeapAddress evaluate(HeapAddress expr, HeapAddress env);
    HeapAddress eval_quote(HeapAddress expr);
    HeapAddress eval_cond(HeapAddress expr, HeapAddress env);
    HeapAddress eval_define(HeapAddress expr, HeapAddress env);
    HeapAddress eval_lambda(HeapAddress expr, HeapAddress env);
    HeapAddress eval_junction(HeapAddress expr, HeapAddress env, bool conjunction);
    HeapAddress eval_application(HeapAddress expr, HeapAddress env);
    HeapAddress apply_lambda(const Rooted& fn, std::vector<Rooted>& args);
    HeapAddress builtin_dispatch(BuiltinOp op, std::vector<Rooted>& args);

    HeapAddress lookup(uint32_t symbol_id, HeapAddress env) const;
    bool truthy(HeapAddress value) const;
    bool deep_equal(HeapAddress a, HeapAddress b) const;
    HeapAddress make_boolean(bool truth) const { return truth ? true_.get() : false_.get(); }
    bool is_cons(HeapAddress a) const { return !a.is_nil() && heap_.kind(a) == PayloadKind::Cons; }
    bool is_symbol(HeapAddress a) const {
        return !a.is_nil() && heap_.kind(a) == PayloadKind::Symbol;
    }
    std::string format_impl(HeapAddress value, int depth, size_t& budget) const;

    Heap& heap_;
    EvalOptions options_;
    RootScope persistent_;
    Rooted global_;
    Rooted true_;
    Rooted false_;
    std::vector<std::pair<uint32_t, Rooted>> builtins_;
    uint32_t sym_quote_;
    uint32_t sym_cond_;
    uint32_t sym_define_;
    uint32_t sym_lambda_;
    uint32_t sym_and_;
    uint32_t sym_or_;
    int depth_ = 0;
};

}  // namespace microlisp
