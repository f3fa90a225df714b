#include "microlisp/evaluator.hpp"

#include <cstdint>

namespace microlisp {

namespace {

constexpr BuiltinOp kAllBuiltins[] = {
    BuiltinOp::Car, BuiltinOp::Cdr, BuiltinOp::Cons, BuiltinOp::Equal, BuiltinOp::Atom,
    BuiltinOp::Not, BuiltinOp::Add, BuiltinOp::Sub, BuiltinOp::Mul, BuiltinOp::Div,
    BuiltinOp::NumEq, BuiltinOp::Gt, BuiltinOp::Ge, BuiltinOp::Lt, BuiltinOp::Le,
};

int32_t wrap32(int64_t value) { return static_cast<int32_t>(static_cast<uint32_t>(value)); }

}  // namespace

struct Interpreter::DepthGuard {
    explicit DepthGuard(Interpreter& interp) : interp_(interp) {
        if (++interp_.depth_ > interp_.options_.depth_limit) {
            --interp_.depth_;
            throw EvalError(EvalErrorKind::RecursionLimit,
                            "recursion limit of " +
                                std::to_string(interp_.options_.depth_limit) +
                                " applications exceeded");
        }
    }
    ~DepthGuard() { --interp_.depth_; }
    Interpreter& interp_;
};

Interpreter::Interpreter(Heap& heap, EvalOptions options)
    : heap_(heap), options_(options), persistent_(heap) {
    global_ = persistent_.root(HeapAddress::nil());
    true_ = persistent_.root(heap_.allocate_boolean(true));
    false_ = persistent_.root(heap_.allocate_boolean(false));
    for (BuiltinOp op : kAllBuiltins) {
        uint32_t id = heap_.symbols().intern(builtin_name(op));
        builtins_.emplace_back(id, persistent_.root(heap_.allocate_builtin(op)));
    }
    sym_quote_ = heap_.symbols().intern("QUOTE");
    sym_cond_ = heap_.symbols().intern("COND");
    sym_define_ = heap_.symbols().intern("DEFINE");
    sym_lambda_ = heap_.symbols().intern("LAMBDA");
    sym_and_ = heap_.symbols().intern("AND");
    sym_or_ = heap_.symbols().intern("OR");
}

HeapAddress Interpreter::eval_top(HeapAddress form) { return evaluate(form, HeapAddress::nil()); }

bool Interpreter::truthy(HeapAddress value) const {
    if (value.is_nil()) return false;
    if (heap_.kind(value) == PayloadKind::Boolean) return heap_.boolean_value(value);
    return true;
}

HeapAddress Interpreter::lookup(uint32_t symbol_id, HeapAddress env) const {
    for (HeapAddress chain : {env, global_.get()}) {
        while (!chain.is_nil()) {
            HeapAddress pair = heap_.cons_car(chain);
            if (heap_.symbol_id(heap_.cons_car(pair)) == symbol_id) {
                return heap_.cons_cdr(pair);
            }
            chain = heap_.cons_cdr(chain);
        }
    }
    for (const auto& [id, object] : builtins_) {
        if (id == symbol_id) return object.get();
    }
    throw EvalError(EvalErrorKind::UnboundSymbol,
                    "unbound symbol '" + heap_.symbols().name(symbol_id) + "'");
}

HeapAddress Interpreter::evaluate(HeapAddress expr, HeapAddress env) {
    if (expr.is_nil()) return expr;
    switch (heap_.kind(expr)) {
        case PayloadKind::Integer:
        case PayloadKind::Boolean:
        case PayloadKind::Builtin:
        case PayloadKind::Lambda:
            return expr;
        case PayloadKind::Symbol:
            return lookup(heap_.symbol_id(expr), env);
        case PayloadKind::Cons:
            break;
    }
    HeapAddress head = heap_.cons_car(expr);
    if (is_symbol(head)) {
        uint32_t id = heap_.symbol_id(head);
        if (id == sym_quote_) return eval_quote(expr);
        if (id == sym_cond_) return eval_cond(expr, env);
        if (id == sym_define_) return eval_define(expr, env);
        if (id == sym_lambda_) return eval_lambda(expr, env);
        if (id == sym_and_) return eval_junction(expr, env, true);
        if (id == sym_or_) return eval_junction(expr, env, false);
    }
    return eval_application(expr, env);
}

HeapAddress Interpreter::eval_quote(HeapAddress expr) {
    HeapAddress rest = heap_.cons_cdr(expr);
    if (!is_cons(rest) || !heap_.cons_cdr(rest).is_nil()) {
        throw EvalError(EvalErrorKind::Malformed, "QUOTE expects exactly one argument");
    }
    return heap_.cons_car(rest);
}

HeapAddress Interpreter::eval_cond(HeapAddress expr, HeapAddress env) {
    RootScope scope(heap_);
    Rooted env_root = scope.root(env);
    Rooted clauses = scope.root(heap_.cons_cdr(expr));
    while (!clauses.get().is_nil()) {
        if (!is_cons(clauses.get())) {
            throw EvalError(EvalErrorKind::Malformed, "COND: improper clause list");
        }
        HeapAddress clause = heap_.cons_car(clauses.get());
        if (!is_cons(clause) || !is_cons(heap_.cons_cdr(clause)) ||
            !heap_.cons_cdr(heap_.cons_cdr(clause)).is_nil()) {
            throw EvalError(EvalErrorKind::Malformed,
                            "COND clause must be a (predicate expression) pair");
        }
        HeapAddress predicate = heap_.cons_car(clause);
        HeapAddress value = evaluate(predicate, env_root.get());
        if (truthy(value)) {
            // Re-read through the root: the predicate may have moved things.
            HeapAddress branch =
                heap_.cons_car(heap_.cons_cdr(heap_.cons_car(clauses.get())));
            HeapAddress branch_env = env_root.get();
            env_root.clear();
            clauses.clear();
            return evaluate(branch, branch_env);
        }
        clauses.set(heap_.cons_cdr(clauses.get()));
    }
    return HeapAddress::nil();
}

HeapAddress Interpreter::eval_define(HeapAddress expr, HeapAddress env) {
    RootScope scope(heap_);
    Rooted env_root = scope.root(env);
    HeapAddress rest = heap_.cons_cdr(expr);
    if (!is_cons(rest) || !is_cons(heap_.cons_cdr(rest)) ||
        !heap_.cons_cdr(heap_.cons_cdr(rest)).is_nil()) {
        throw EvalError(EvalErrorKind::Malformed, "DEFINE expects a name and one expression");
    }
    HeapAddress name = heap_.cons_car(rest);
    if (!is_symbol(name)) {
        throw EvalError(EvalErrorKind::Malformed, "DEFINE: name must be a symbol");
    }
    Rooted name_root = scope.root(name);
    HeapAddress value_expr = heap_.cons_car(heap_.cons_cdr(rest));
    Rooted value = scope.root(evaluate(value_expr, env_root.get()));
    Rooted pair = scope.root(heap_.allocate_cons(name_root.get(), value.get()));
    global_.set(heap_.allocate_cons(pair.get(), global_.get()));
    return HeapAddress::nil();
}

HeapAddress Interpreter::eval_lambda(HeapAddress expr, HeapAddress env) {
    HeapAddress code = heap_.cons_cdr(expr);
    if (!is_cons(code) || !is_cons(heap_.cons_cdr(code)) ||
        !heap_.cons_cdr(heap_.cons_cdr(code)).is_nil()) {
        throw EvalError(EvalErrorKind::Malformed,
                        "LAMBDA expects a parameter list and one body expression");
    }
    for (HeapAddress params = heap_.cons_car(code); !params.is_nil();
         params = heap_.cons_cdr(params)) {
        if (!is_cons(params) || !is_symbol(heap_.cons_car(params))) {
            throw EvalError(EvalErrorKind::Malformed,
                            "LAMBDA: parameters must be a list of symbols");
        }
    }
    return heap_.allocate_lambda(code, env);
}

HeapAddress Interpreter::eval_junction(HeapAddress expr, HeapAddress env, bool conjunction) {
    RootScope scope(heap_);
    Rooted env_root = scope.root(env);
    Rooted terms = scope.root(heap_.cons_cdr(expr));
    while (!terms.get().is_nil()) {
        if (!is_cons(terms.get())) {
            throw EvalError(EvalErrorKind::Malformed, "AND/OR: improper argument list");
        }
        HeapAddress term = heap_.cons_car(terms.get());
        bool value = truthy(evaluate(term, env_root.get()));
        if (conjunction && !value) return false_.get();
        if (!conjunction && value) return true_.get();
        terms.set(heap_.cons_cdr(terms.get()));
    }
    return conjunction ? true_.get() : false_.get();
}

HeapAddress Interpreter::eval_application(HeapAddress expr, HeapAddress env) {
    DepthGuard guard(*this);
    RootScope scope(heap_);
    Rooted env_root = scope.root(env);
    Rooted rest = scope.root(heap_.cons_cdr(expr));
    HeapAddress head = heap_.cons_car(expr);
    Rooted fn = scope.root(evaluate(head, env_root.get()));

    std::vector<Rooted> args;
    while (!rest.get().is_nil()) {
        HeapAddress cell = rest.get();
        if (heap_.kind(cell) != PayloadKind::Cons) {
            throw EvalError(EvalErrorKind::Malformed, "improper argument list");
        }
        HeapAddress operand = heap_.cons_car(cell);
        HeapAddress next = heap_.cons_cdr(cell);
        HeapAddress operand_env = env_root.get();
        if (next.is_nil()) {
            // Final operand: this frame no longer needs its environment or
            // the operand spine, so stop pinning them across the recursion.
            env_root.clear();
            rest.clear();
        } else {
            rest.set(next);
        }
        args.push_back(scope.root(evaluate(operand, operand_env)));
        if (next.is_nil()) break;
    }

    HeapAddress f = fn.get();
    if (f.is_nil()) {
        throw EvalError(EvalErrorKind::NotCallable, "NIL is not callable");
    }
    switch (heap_.kind(f)) {
        case PayloadKind::Builtin:
            return builtin_dispatch(heap_.builtin_op(f), args);
        case PayloadKind::Lambda:
            return apply_lambda(fn, args);
        default:
            throw EvalError(EvalErrorKind::NotCallable,
                            "value is not callable: " + format_value(f));
    }
}

HeapAddress Interpreter::apply_lambda(const Rooted& fn, std::vector<Rooted>& args) {
    RootScope scope(heap_);
    HeapAddress code = heap_.lambda_code(fn.get());
    Rooted params = scope.root(heap_.cons_car(code));
    Rooted body = scope.root(heap_.cons_car(heap_.cons_cdr(code)));
    Rooted env_new = scope.root(heap_.lambda_env(fn.get()));

    size_t arity = 0;
    for (HeapAddress p = params.get(); !p.is_nil(); p = heap_.cons_cdr(p)) ++arity;
    if (arity != args.size()) {
        throw EvalError(EvalErrorKind::ArityMismatch,
                        "expected " + std::to_string(arity) + " argument(s), got " +
                            std::to_string(args.size()));
    }

    for (size_t i = 0; i < args.size(); ++i) {
        HeapAddress param_symbol = heap_.cons_car(params.get());
        // The fresh pair rides unrooted straight into the next allocation,
        // which roots its arguments itself.
        HeapAddress pair = heap_.allocate_cons(param_symbol, args[i].get());
        env_new.set(heap_.allocate_cons(pair, env_new.get()));
        params.set(heap_.cons_cdr(params.get()));
    }

    HeapAddress body_expr = body.get();
    HeapAddress call_env = env_new.get();
    // Release before the tail call; the callee roots them again immediately
    // and the body stays reachable through the caller's fn root.
    body.clear();
    env_new.clear();
    params.clear();
    return evaluate(body_expr, call_env);
}

HeapAddress Interpreter::apply_builtin_op(BuiltinOp op, const std::vector<HeapAddress>& args) {
    RootScope scope(heap_);
    std::vector<Rooted> rooted;
    rooted.reserve(args.size());
    for (HeapAddress a : args) rooted.push_back(scope.root(a));
    return builtin_dispatch(op, rooted);
}

HeapAddress Interpreter::builtin_dispatch(BuiltinOp op, std::vector<Rooted>& args) {
    auto need = [&](size_t n) {
        if (args.size() != n) {
            throw EvalError(EvalErrorKind::ArityMismatch,
                            std::string(builtin_name(op)) + " expects " + std::to_string(n) +
                                " argument(s), got " + std::to_string(args.size()));
        }
    };
    auto integer = [&](size_t i) {
        HeapAddress a = args[i].get();
        if (a.is_nil() || heap_.kind(a) != PayloadKind::Integer) {
            throw EvalError(EvalErrorKind::TypeMismatch,
                            std::string(builtin_name(op)) + " expects integer arguments");
        }
        return static_cast<int64_t>(heap_.integer_value(a));
    };

    switch (op) {
        case BuiltinOp::Car: {
            need(1);
            HeapAddress a = args[0].get();
            if (!is_cons(a)) {
                throw EvalError(EvalErrorKind::CarOfNonList,
                                "CAR expects a non-empty list, got " + format_value(a));
            }
            return heap_.cons_car(a);
        }
        case BuiltinOp::Cdr: {
            need(1);
            HeapAddress a = args[0].get();
            if (!is_cons(a)) {
                throw EvalError(EvalErrorKind::CdrOfNonList,
                                "CDR expects a non-empty list, got " + format_value(a));
            }
            return heap_.cons_cdr(a);
        }
        case BuiltinOp::Cons:
            need(2);
            return heap_.allocate_cons(args[0].get(), args[1].get());
        case BuiltinOp::Equal:
        case BuiltinOp::NumEq:
            need(2);
            return make_boolean(deep_equal(args[0].get(), args[1].get()));
        case BuiltinOp::Atom: {
            need(1);
            HeapAddress a = args[0].get();
            return make_boolean(!a.is_nil() && heap_.kind(a) != PayloadKind::Cons);
        }
        case BuiltinOp::Not:
            need(1);
            return make_boolean(!truthy(args[0].get()));
        case BuiltinOp::Add:
            need(2);
            return heap_.allocate_integer(wrap32(integer(0) + integer(1)));
        case BuiltinOp::Sub:
            need(2);
            return heap_.allocate_integer(wrap32(integer(0) - integer(1)));
        case BuiltinOp::Mul:
            need(2);
            return heap_.allocate_integer(wrap32(integer(0) * integer(1)));
        case BuiltinOp::Div: {
            need(2);
            int64_t numerator = integer(0);
            int64_t denominator = integer(1);
            if (denominator == 0) {
                throw EvalError(EvalErrorKind::DivisionByZero, "division by zero");
            }
            return heap_.allocate_integer(wrap32(numerator / denominator));
        }
        case BuiltinOp::Gt:
            need(2);
            return make_boolean(integer(0) > integer(1));
        case BuiltinOp::Ge:
            need(2);
            return make_boolean(integer(0) >= integer(1));
        case BuiltinOp::Lt:
            need(2);
            return make_boolean(integer(0) < integer(1));
        case BuiltinOp::Le:
            need(2);
            return make_boolean(integer(0) <= integer(1));
    }
    throw std::logic_error("unreachable builtin op");
}

bool Interpreter::deep_equal(HeapAddress a, HeapAddress b) const {
    if (a == b) return true;
    if (a.is_nil() || b.is_nil()) return false;
    PayloadKind ka = heap_.kind(a);
    if (ka != heap_.kind(b)) return false;
    switch (ka) {
        case PayloadKind::Integer:
            return heap_.integer_value(a) == heap_.integer_value(b);
        case PayloadKind::Symbol:
            return heap_.symbol_id(a) == heap_.symbol_id(b);
        case PayloadKind::Boolean:
            return heap_.boolean_value(a) == heap_.boolean_value(b);
        case PayloadKind::Builtin:
            return heap_.builtin_op(a) == heap_.builtin_op(b);
        case PayloadKind::Cons:
            return deep_equal(heap_.cons_car(a), heap_.cons_car(b)) &&
                   deep_equal(heap_.cons_cdr(a), heap_.cons_cdr(b));
        case PayloadKind::Lambda:
            return false;  // identity only, handled by a == b
    }
    return false;
}

std::string Interpreter::format_value(HeapAddress value) const {
    size_t budget = 100000;
    return format_impl(value, 0, budget);
}

std::string Interpreter::format_impl(HeapAddress value, int depth, size_t& budget) const {
    if (depth > 1000 || budget == 0) return "...";
    if (budget > 0) --budget;
    if (value.is_nil()) return "NIL";
    switch (heap_.kind(value)) {
        case PayloadKind::Integer:
            return std::to_string(heap_.integer_value(value));
        case PayloadKind::Symbol:
            return heap_.symbols().name(heap_.symbol_id(value));
        case PayloadKind::Boolean:
            return heap_.boolean_value(value) ? "#T" : "#F";
        case PayloadKind::Builtin:
            return std::string("#<builtin ") + builtin_name(heap_.builtin_op(value)) + ">";
        case PayloadKind::Lambda:
            return "#<lambda>";
        case PayloadKind::Cons:
            break;
    }
    std::string out = "(";
    out += format_impl(heap_.cons_car(value), depth + 1, budget);
    HeapAddress tail = heap_.cons_cdr(value);
    while (!tail.is_nil() && budget > 0) {
        if (heap_.kind(tail) != PayloadKind::Cons) {
            out += " . ";
            out += format_impl(tail, depth + 1, budget);
            out += ")";
            return out;
        }
        --budget;
        out += " ";
        out += format_impl(heap_.cons_car(tail), depth + 1, budget);
        tail = heap_.cons_cdr(tail);
    }
    out += budget == 0 && !tail.is_nil() ? " ...)" : ")";
    return out;
}

}  // namespace microlisp
