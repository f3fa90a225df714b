#include "microlisp/reader.hpp"

#include <cctype>
#include <cstdint>

namespace microlisp {

namespace {

bool is_integer_text(std::string_view text) {
    size_t start = text.size() > 1 && text[0] == '-' ? 1 : 0;
    if (start >= text.size()) return false;
    for (size_t i = start; i < text.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
    }
    return true;
}

// Literals wrap into 32 bits the same way arithmetic does.
int32_t wrap_integer(std::string_view text) {
    bool negative = text[0] == '-';
    uint64_t magnitude = 0;
    for (char c : text.substr(negative ? 1 : 0)) {
        magnitude = magnitude * 10 + static_cast<uint64_t>(c - '0');
        magnitude &= 0xFFFFFFFFFFFFull;  // keep the accumulator bounded
    }
    uint32_t wrapped = static_cast<uint32_t>(magnitude);
    if (negative) wrapped = ~wrapped + 1;
    return static_cast<int32_t>(wrapped);
}

}  // namespace

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    int line = 1;
    int column = 1;
    size_t i = 0;
    auto advance = [&](char c) {
        if (c == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
        ++i;
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(c);
            continue;
        }
        if (c == '(' || c == ')') {
            tokens.push_back(Token{c == '(' ? TokenKind::LeftParen : TokenKind::RightParen,
                                   std::string(1, c), line, column});
            advance(c);
            continue;
        }
        int start_line = line;
        int start_column = column;
        std::string word;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != '(' && text[i] != ')') {
            word.push_back(text[i]);
            advance(text[i]);
        }
        tokens.push_back(Token{is_integer_text(word) ? TokenKind::IntegerLiteral
                                                     : TokenKind::SymbolText,
                               std::move(word), start_line, start_column});
    }
    return tokens;
}

HeapAddress Parser::parse_atom(const Token& token) {
    if (token.kind == TokenKind::IntegerLiteral) {
        return heap_.allocate_integer(wrap_integer(token.text));
    }
    if (token.text == "NIL") return HeapAddress::nil();
    if (token.text == "#T") return heap_.allocate_boolean(true);
    if (token.text == "#F") return heap_.allocate_boolean(false);
    return heap_.allocate_symbol(heap_.symbols().intern(token.text));
}

HeapAddress Parser::parse_list(const Token& opener) {
    RootScope scope(heap_);
    std::vector<Rooted> elements;
    while (true) {
        if (position_ >= tokens_.size()) {
            throw ParseError(ParseErrorKind::UnbalancedParens, opener.line, opener.column,
                             "unbalanced parentheses: '(' is never closed");
        }
        if (tokens_[position_].kind == TokenKind::RightParen) {
            ++position_;
            break;
        }
        elements.push_back(scope.root(parse_form()));
    }
    Rooted list = scope.root(HeapAddress::nil());
    for (size_t i = elements.size(); i-- > 0;) {
        list.set(heap_.allocate_cons(elements[i].get(), list.get()));
    }
    return list.get();
}

HeapAddress Parser::parse_form() {
    const Token token = tokens_[position_++];
    switch (token.kind) {
        case TokenKind::LeftParen:
            return parse_list(token);
        case TokenKind::RightParen:
            throw ParseError(ParseErrorKind::UnbalancedParens, token.line, token.column,
                             "unbalanced parentheses: unexpected ')'");
        case TokenKind::IntegerLiteral:
        case TokenKind::SymbolText:
            return parse_atom(token);
    }
    throw std::logic_error("unreachable token kind");
}

HeapAddress parse_single(std::string_view text, Heap& heap, bool& found) {
    Parser parser(tokenize(text), heap);
    if (parser.at_end()) {
        found = false;
        return HeapAddress::nil();
    }
    RootScope scope(heap);
    Rooted form = scope.root(parser.parse_form());
    if (!parser.at_end()) {
        const Token& extra = parser.peek();
        throw ParseError(ParseErrorKind::TrailingTokens, extra.line, extra.column,
                         "trailing tokens after a complete form");
    }
    found = true;
    return form.get();
}

}  // namespace microlisp
