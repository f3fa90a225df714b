#include <string>
#include <vector>

#include "doctest.h"
#include "microlisp/evaluator.hpp"
#include "microlisp/reader.hpp"

using namespace microlisp;

namespace {

HeapConfig test_config() {
    HeapConfig config;
    config.capacity_bytes = 16384;
    config.collector = CollectorKind::MarkSweep;
    config.validate_after_gc = true;
    return config;
}

}  // namespace

TEST_CASE("tokenize splits parens, symbols, and integer literals") {
    auto tokens = tokenize("(QUOTE A)");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[0].kind == TokenKind::LeftParen);
    CHECK(tokens[1].kind == TokenKind::SymbolText);
    CHECK(tokens[1].text == "QUOTE");
    CHECK(tokens[2].kind == TokenKind::SymbolText);
    CHECK(tokens[2].text == "A");
    CHECK(tokens[3].kind == TokenKind::RightParen);
}

TEST_CASE("tokenizing the empty string yields no tokens") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("  \n\t ").empty());
}

TEST_CASE("a lone '-' is a symbol while '-' followed by digits is a literal") {
    auto tokens = tokenize("(- n 1)");
    REQUIRE(tokens.size() == 5);
    CHECK(tokens[1].kind == TokenKind::SymbolText);
    CHECK(tokens[1].text == "-");
    CHECK(tokens[2].kind == TokenKind::SymbolText);
    CHECK(tokens[3].kind == TokenKind::IntegerLiteral);
    CHECK(tokens[3].text == "1");

    auto negative = tokenize("-42");
    REQUIRE(negative.size() == 1);
    CHECK(negative[0].kind == TokenKind::IntegerLiteral);

    auto oddball = tokenize("-4x2");
    REQUIRE(oddball.size() == 1);
    CHECK(oddball[0].kind == TokenKind::SymbolText);
}

TEST_CASE("positions are recorded line by line") {
    auto tokens = tokenize("(A\n  B)");
    REQUIRE(tokens.size() == 4);
    CHECK(tokens[1].line == 1);
    CHECK(tokens[1].column == 2);
    CHECK(tokens[2].line == 2);
    CHECK(tokens[2].column == 3);
}

TEST_CASE("parse builds NIL-terminated cons chains") {
    Heap heap(test_config());
    bool found = false;
    RootScope scope(heap);
    Rooted form = scope.root(parse_single("(A B C)", heap, found));
    REQUIRE(found);
    HeapAddress first = form.get();
    CHECK(heap.kind(first) == PayloadKind::Cons);
    HeapAddress second = heap.cons_cdr(first);
    HeapAddress third = heap.cons_cdr(second);
    CHECK(heap.cons_cdr(third).is_nil());
    CHECK(heap.symbols().name(heap.symbol_id(heap.cons_car(first))) == "A");
    CHECK(heap.symbols().name(heap.symbol_id(heap.cons_car(third))) == "C");
}

TEST_CASE("'(' alone reports UnbalancedParens with its position") {
    Heap heap(test_config());
    bool found = false;
    try {
        parse_single("(", heap, found);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseErrorKind::UnbalancedParens);
        CHECK(e.line() == 1);
        CHECK(e.column() == 1);
    }
    CHECK_THROWS_AS(parse_single(")", heap, found), ParseError);
}

TEST_CASE("'()' parses to NIL and prints as NIL") {
    Heap heap(test_config());
    Interpreter interp(heap);
    bool found = false;
    HeapAddress form = parse_single("()", heap, found);
    REQUIRE(found);
    CHECK(form.is_nil());
    CHECK(interp.format_value(form) == "NIL");
}

TEST_CASE("two forms on one REPL line report TrailingTokens") {
    Heap heap(test_config());
    bool found = false;
    try {
        parse_single("(A) (B)", heap, found);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseErrorKind::TrailingTokens);
    }
}

TEST_CASE("blank input reports no form") {
    Heap heap(test_config());
    bool found = true;
    HeapAddress form = parse_single("   ", heap, found);
    CHECK_FALSE(found);
    CHECK(form.is_nil());
}

TEST_CASE("parser allocates one cell per atom plus one per list element") {
    Heap heap(test_config());
    bool found = false;

    uint64_t before = heap.stats().alloc_count;
    parse_single("(A B C)", heap, found);
    CHECK(heap.stats().alloc_count - before == 6);  // 3 atoms + 3 list cells

    before = heap.stats().alloc_count;
    parse_single("((A))", heap, found);
    CHECK(heap.stats().alloc_count - before == 3);  // 1 atom + 2 list cells

    before = heap.stats().alloc_count;
    parse_single("(+ 1 (fib 2))", heap, found);
    // atoms +,1,fib,2 plus outer list of 3 and inner list of 2
    CHECK(heap.stats().alloc_count - before == 9);
}

TEST_CASE("every benchmark line round-trips through parse and print") {
    Heap heap(test_config());
    Interpreter interp(heap);
    std::vector<std::string> lines = {
        "(QUOTE A)",
        "(CONS (QUOTE A) (QUOTE (B C)))",
        "(DEFINE fib (LAMBDA (n) (COND ((OR (= n 0) (= n 1)) 1) (#T (+ (fib (- n 1)) (fib (- n 2)))))))",
        "(map (LAMBDA (x) (+ x 1)) (range 0 50))",
        "(= (CAR (CDR (QUOTE (A B)))) (QUOTE A))",
        "(COND ((= foo bar) 7) (#T 9))",
    };
    for (const std::string& line : lines) {
        CAPTURE(line);
        bool found = false;
        RootScope scope(heap);
        Rooted first = scope.root(parse_single(line, heap, found));
        REQUIRE(found);
        std::string printed = interp.format_value(first.get());
        Rooted second = scope.root(parse_single(printed, heap, found));
        REQUIRE(found);
        CHECK(interp.format_value(second.get()) == printed);
        CHECK(printed == line);  // these lines are already in canonical form
    }
}

TEST_CASE("integer literals wrap into 32 bits like arithmetic does") {
    Heap heap(test_config());
    bool found = false;
    CHECK(heap.integer_value(parse_single("2147483647", heap, found)) == 2147483647);
    CHECK(heap.integer_value(parse_single("-2147483648", heap, found)) == -2147483648);
    CHECK(heap.integer_value(parse_single("4294967296", heap, found)) == 0);
    CHECK(heap.integer_value(parse_single("4294967297", heap, found)) == 1);
}
