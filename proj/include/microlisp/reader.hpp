#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "microlisp/heap.hpp"

namespace microlisp {

enum class TokenKind { LeftParen, RightParen, IntegerLiteral, SymbolText };

struct Token {
    TokenKind kind;
    std::string text;
    int line = 1;
    int column = 1;
};

enum class ParseErrorKind { UnbalancedParens, TrailingTokens };

class ParseError : public std::runtime_error {
  public:
    ParseError(ParseErrorKind kind, int line, int column, const std::string& message)
        : std::runtime_error(message + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          kind_(kind),
          line_(line),
          column_(column) {}

    ParseErrorKind kind() const { return kind_; }
    int line() const { return line_; }
    int column() const { return column_; }

  private:
    ParseErrorKind kind_;
    int line_;
    int column_;
};

// Whitespace-separated, parenthesis-delimited maximal tokens. Any character
// sequence tokenizes; an optional '-' followed by at least one digit is an
// integer literal, every other run is symbol text.
std::vector<Token> tokenize(std::string_view text);

// Streaming parser over a token sequence. Forms are heap-allocated cons
// chains terminated by NIL; every intermediate address is root-protected
// while the form is under construction.
class Parser {
  public:
    Parser(std::vector<Token> tokens, Heap& heap)
        : tokens_(std::move(tokens)), heap_(heap) {}

    bool at_end() const { return position_ >= tokens_.size(); }
    const Token& peek() const { return tokens_[position_]; }

    // Parses the next complete form. Precondition: !at_end().
    HeapAddress parse_form();

  private:
    HeapAddress parse_list(const Token& opener);
    HeapAddress parse_atom(const Token& token);

    std::vector<Token> tokens_;
    Heap& heap_;
    size_t position_ = 0;
};

// One-form-per-line entry point for the REPL: exactly one complete form, or
// TrailingTokens / UnbalancedParens. Returns NIL with found=false on a blank
// line.
HeapAddress parse_single(std::string_view text, Heap& heap, bool& found);

}  // namespace microlisp
