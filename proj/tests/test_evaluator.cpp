#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "microlisp/evaluator.hpp"
#include "microlisp/reader.hpp"

using namespace microlisp;

namespace {

struct Fixture {
    explicit Fixture(CollectorKind collector = CollectorKind::Cheney,
                     size_t bytes = 10 * 16384, bool stress = false)
        : config{bytes, collector, stress, true}, heap(config), interp(heap) {}

    std::string eval(const std::string& source) {
        bool found = false;
        RootScope scope(heap);
        Rooted form = scope.root(parse_single(source, heap, found));
        REQUIRE(found);
        Rooted value = scope.root(interp.eval_top(form.get()));
        return interp.format_value(value.get());
    }

    HeapConfig config;
    Heap heap;
    Interpreter interp;
};

// Independent oracle for the wrapped factorials: n! reduced mod 2^32.
uint32_t factorial_mod32(uint32_t n) {
    uint32_t result = 1;
    for (uint32_t i = 2; i <= n; ++i) result *= i;
    return result;
}

}  // namespace

TEST_CASE("self-evaluating values and QUOTE") {
    Fixture fx;
    CHECK(fx.eval("5") == "5");
    CHECK(fx.eval("#T") == "#T");
    CHECK(fx.eval("NIL") == "NIL");
    CHECK(fx.eval("(QUOTE A)") == "A");
    CHECK(fx.eval("(QUOTE (A B C))") == "(A B C)");
}

TEST_CASE("list primitives") {
    Fixture fx;
    CHECK(fx.eval("(CAR (QUOTE (A B C)))") == "A");
    CHECK(fx.eval("(CDR (QUOTE (A B C)))") == "(B C)");
    CHECK(fx.eval("(CONS (QUOTE A) (QUOTE (B C)))") == "(A B C)");
    CHECK(fx.eval("(CDR (CONS (+ 0 1) (+ 2 3)))") == "5");
    CHECK(fx.eval("(CONS 1 5)") == "(1 . 5)");
    CHECK(fx.eval("(CAR (QUOTE (0 1)))") == "0");
}

TEST_CASE("equality and predicates") {
    Fixture fx;
    CHECK(fx.eval("(= (CAR (QUOTE (A B))) (QUOTE A))") == "#T");
    CHECK(fx.eval("(= (CAR (CDR (QUOTE (A B)))) (QUOTE A))") == "#F");
    CHECK(fx.eval("(EQUAL NIL NIL)") == "#T");
    CHECK(fx.eval("(EQUAL (QUOTE (A (B))) (QUOTE (A (B))))") == "#T");
    CHECK(fx.eval("(EQUAL (QUOTE (A B)) (QUOTE (A C)))") == "#F");
    CHECK(fx.eval("(ATOM (QUOTE A))") == "#T");
    CHECK(fx.eval("(ATOM 5)") == "#T");
    CHECK(fx.eval("(ATOM (QUOTE (A)))") == "#F");
    CHECK(fx.eval("(ATOM NIL)") == "#F");
    CHECK(fx.eval("(NOT #F)") == "#T");
    CHECK(fx.eval("(NOT 17)") == "#F");
}

TEST_CASE("COND picks the first clause whose predicate is neither NIL nor #F") {
    Fixture fx;
    CHECK(fx.eval("(COND (#T (+ 0 1)))") == "1");
    CHECK(fx.eval("(DEFINE foo (+ 0 1))") == "NIL");
    CHECK(fx.eval("(DEFINE bar 0)") == "NIL");
    CHECK(fx.eval("(COND ((= foo bar) 7) (#T 9))") == "9");
    CHECK(fx.eval("(COND ((= (QUOTE A) (QUOTE B)) (QUOTE C)) ((NOT #F) (QUOTE yee)))") ==
          "yee");
    CHECK(fx.eval("(COND (0 1))") == "1");       // 0 is truthy
    CHECK(fx.eval("(COND (NIL 1))") == "NIL");   // no clause matched
    CHECK(fx.eval("(COND ((QUOTE x) 2))") == "2");
}

TEST_CASE("DEFINE binds in the global frame and lambdas capture their environment") {
    Fixture fx;
    CHECK(fx.eval("(DEFINE foo (+ 0 1))") == "NIL");
    CHECK(fx.eval("foo") == "1");
    CHECK(fx.eval("(DEFINE bar 0)") == "NIL");
    CHECK(fx.eval("(+ foo bar)") == "1");
    CHECK(fx.eval("((LAMBDA (X) (+ X 1)) 5)") == "6");
    CHECK(fx.eval("(DEFINE add (LAMBDA (X) (LAMBDA (Y) (+ X Y))))") == "NIL");
    CHECK(fx.eval("((add 4) 5)") == "9");
    // the inner lambda keeps X alive across collections
    fx.heap.collect_now();
    CHECK(fx.eval("((add 30) 12)") == "42");
}

TEST_CASE("recursive functions evaluate through the global frame") {
    Fixture fx;
    fx.eval("(DEFINE fac (LAMBDA (N) (COND ((= N 0) 1) (#T (* N (fac (- N 1)))))))");
    CHECK(fx.eval("(fac 0)") == "1");
    CHECK(fx.eval("(fac 10)") == "3628800");
    CHECK(fx.eval("(fac 13)") == std::to_string(static_cast<int32_t>(factorial_mod32(13))));
    CHECK(fx.eval("(fac 13)") == "1932053504");
    CHECK(fx.eval("(fac 14)") == "1278945280");
    CHECK(fx.eval("(fac 15)") == std::to_string(static_cast<int32_t>(factorial_mod32(15))));
    CHECK(fx.eval("(fac 15)") == "2004310016");
}

TEST_CASE("range and the higher-order map") {
    Fixture fx;
    fx.eval(
        "(DEFINE range (LAMBDA (LOW HIGH) (COND ((> LOW HIGH) NIL) "
        "(#T (CONS LOW (range (+ LOW 1) HIGH))))))");
    fx.eval(
        "(DEFINE map (LAMBDA (f xs) (COND ((= xs NIL) NIL) "
        "(#T (CONS (f (CAR xs)) (map f (CDR xs)))))))");
    fx.eval(
        "(DEFINE fib (LAMBDA (n) (COND ((OR (= n 0) (= n 1)) 1) "
        "(#T (+ (fib (- n 1)) (fib (- n 2)))))))");
    CHECK(fx.eval("(range 0 5)") == "(0 1 2 3 4 5)");
    CHECK(fx.eval("(map (LAMBDA (x) (+ x 1)) (range 0 9))") == "(1 2 3 4 5 6 7 8 9 10)");
    CHECK(fx.eval("(map (LAMBDA (x) (fib x)) (range 0 20))") ==
          "(1 1 2 3 5 8 13 21 34 55 89 144 233 377 610 987 1597 2584 4181 6765 10946)");
}

TEST_CASE("arithmetic wraps modulo 2^32 and division truncates toward zero") {
    Fixture fx;
    CHECK(fx.eval("(+ 0 0)") == "0");
    CHECK(fx.eval("(+ 2147483647 1)") == "-2147483648");
    CHECK(fx.eval("(* 65536 65536)") == "0");
    CHECK(fx.eval("(- 0 2147483648)") == "-2147483648");
    CHECK(fx.eval("(/ 7 2)") == "3");
    CHECK(fx.eval("(/ -7 2)") == "-3");
    CHECK(fx.eval("(/ -2147483648 -1)") == "-2147483648");  // wraps
    CHECK(fx.eval("(< 1 2)") == "#T");
    CHECK(fx.eval("(>= 2 2)") == "#T");
    CHECK(fx.eval("(> -1 1)") == "#F");
}

TEST_CASE("AND and OR short-circuit") {
    Fixture fx;
    CHECK(fx.eval("(OR #F #T)") == "#T");
    CHECK(fx.eval("(AND #T #F)") == "#F");
    CHECK(fx.eval("(AND)") == "#T");
    CHECK(fx.eval("(OR)") == "#F");
    // the second term would be an error if evaluated
    CHECK(fx.eval("(OR #T (CAR 5))") == "#T");
    CHECK(fx.eval("(AND #F (CAR 5))") == "#F");
}

TEST_CASE("error paths carry their kinds") {
    Fixture fx;
    auto kind_of = [&](const std::string& source) {
        try {
            fx.eval(source);
        } catch (const EvalError& e) {
            return e.kind();
        }
        throw std::runtime_error("expected EvalError from " + source);
    };
    CHECK(kind_of("nope") == EvalErrorKind::UnboundSymbol);
    CHECK(kind_of("(CAR 5)") == EvalErrorKind::CarOfNonList);
    CHECK(kind_of("(CAR NIL)") == EvalErrorKind::CarOfNonList);
    CHECK(kind_of("(CDR (QUOTE A))") == EvalErrorKind::CdrOfNonList);
    CHECK(kind_of("(5 6)") == EvalErrorKind::NotCallable);
    CHECK(kind_of("((LAMBDA (X) X) 1 2)") == EvalErrorKind::ArityMismatch);
    CHECK(kind_of("(+ 1)") == EvalErrorKind::ArityMismatch);
    CHECK(kind_of("(+ 1 (QUOTE A))") == EvalErrorKind::TypeMismatch);
    CHECK(kind_of("(/ 1 0)") == EvalErrorKind::DivisionByZero);
    CHECK(kind_of("(QUOTE)") == EvalErrorKind::Malformed);
    // session survives every error above
    CHECK(fx.eval("(+ 2 3)") == "5");
}

TEST_CASE("the recursion limit yields RecursionLimit instead of a crash") {
    HeapConfig config{1 << 20, CollectorKind::Cheney, false, false};
    Heap heap(config);
    Interpreter interp(heap, EvalOptions{64});
    bool found = false;
    RootScope scope(heap);
    Rooted define = scope.root(
        parse_single("(DEFINE down (LAMBDA (n) (COND ((= n 0) 0) (#T (down (- n 1))))))", heap,
                     found));
    interp.eval_top(define.get());
    Rooted ok = scope.root(parse_single("(down 30)", heap, found));
    CHECK_NOTHROW(interp.eval_top(ok.get()));
    Rooted deep = scope.root(parse_single("(down 100000)", heap, found));
    try {
        interp.eval_top(deep.get());
        FAIL("expected RecursionLimit");
    } catch (const EvalError& e) {
        CHECK(e.kind() == EvalErrorKind::RecursionLimit);
    }
    // the interpreter is still usable afterwards
    Rooted again = scope.root(parse_single("(down 5)", heap, found));
    CHECK_NOTHROW(interp.eval_top(again.get()));
}

TEST_CASE("deep recursion does not pin dead environments") {
    // (range 0 150) in a heap whose mutator half holds only 512 slots: the
    // result needs ~302 slots, which only fits if per-frame environments die
    // during the descent.
    Fixture fx(CollectorKind::Cheney, 16384);
    fx.eval(
        "(DEFINE range (LAMBDA (LOW HIGH) (COND ((> LOW HIGH) NIL) "
        "(#T (CONS LOW (range (+ LOW 1) HIGH))))))");
    std::string printed = fx.eval("(range 0 150)");
    CHECK(printed.substr(0, 10) == "(0 1 2 3 4");
    CHECK(printed.substr(printed.size() - 9) == " 149 150)");
}

TEST_CASE("EQUAL is an equivalence relation on random acyclic values") {
    Fixture fx(CollectorKind::MarkSweep, 1 << 20);
    std::mt19937 rng(7);

    // Random value of bounded depth, returned rooted in the caller's scope.
    std::function<HeapAddress(int)> random_value = [&](int depth) -> HeapAddress {
        int roll = std::uniform_int_distribution<int>(0, depth > 0 ? 5 : 3)(rng);
        switch (roll) {
            case 0:
                return fx.heap.allocate_integer(std::uniform_int_distribution<int>(-3, 3)(rng));
            case 1:
                return fx.heap.allocate_boolean(std::uniform_int_distribution<int>(0, 1)(rng));
            case 2:
                return fx.heap.allocate_symbol(fx.heap.symbols().intern(
                    std::string(1, static_cast<char>('a' + std::uniform_int_distribution<int>(
                                                               0, 3)(rng)))));
            case 3:
                return HeapAddress::nil();
            default: {
                RootScope scope(fx.heap);
                Rooted car = scope.root(random_value(depth - 1));
                Rooted cdr = scope.root(random_value(depth - 1));
                return fx.heap.allocate_cons(car.get(), cdr.get());
            }
        }
    };

    auto equal = [&](HeapAddress a, HeapAddress b) {
        return fx.heap.boolean_value(
            fx.interp.apply_builtin_op(BuiltinOp::Equal, {a, b}));
    };

    for (int round = 0; round < 300; ++round) {
        RootScope scope(fx.heap);
        Rooted a = scope.root(random_value(3));
        Rooted b = scope.root(random_value(3));
        Rooted c = scope.root(random_value(3));
        CHECK(equal(a.get(), a.get()));                      // reflexive
        CHECK(equal(a.get(), b.get()) == equal(b.get(), a.get()));  // symmetric
        if (equal(a.get(), b.get()) && equal(b.get(), c.get())) {   // transitive
            CHECK(equal(a.get(), c.get()));
        }
    }
}

TEST_CASE("a small script prints identically under every collector and under stress") {
    const std::vector<std::string> script = {
        "(DEFINE range (LAMBDA (LOW HIGH) (COND ((> LOW HIGH) NIL) "
        "(#T (CONS LOW (range (+ LOW 1) HIGH))))))",
        "(DEFINE map (LAMBDA (f xs) (COND ((= xs NIL) NIL) "
        "(#T (CONS (f (CAR xs)) (map f (CDR xs)))))))",
        "(map (LAMBDA (x) (* x x)) (range 0 12))",
        "(CONS (QUOTE A) (QUOTE (B C)))",
    };
    std::vector<std::string> reference;
    for (CollectorKind collector :
         {CollectorKind::MarkSweep, CollectorKind::Cheney, CollectorKind::Lisp2}) {
        for (bool stress : {false, true}) {
            CAPTURE(to_string(collector));
            CAPTURE(stress);
            Fixture fx(collector, 65536, stress);
            std::vector<std::string> outputs;
            for (const std::string& line : script) outputs.push_back(fx.eval(line));
            if (reference.empty()) {
                reference = outputs;
            } else {
                CHECK(outputs == reference);
            }
        }
    }
    CHECK(reference.back() == "(A B C)");
}
