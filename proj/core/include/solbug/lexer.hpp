#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace solbug {

/// Byte range [start, end) into a source file.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool empty() const { return start == end; }
    bool contains(std::size_t offset) const { return offset >= start && offset < end; }
    bool encloses(const Span& o) const { return o.start >= start && o.end <= end; }

    auto operator<=>(const Span&) const = default;
};

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Punctuation,
    Comment,
    Whitespace,
};

std::string_view to_string(TokenKind kind);

struct Token {
    TokenKind kind = TokenKind::Punctuation;
    std::string text;
    Span span;

    bool trivia() const { return kind == TokenKind::Comment || kind == TokenKind::Whitespace; }
    bool is(std::string_view s) const { return text == s; }
};

/// Lossless lexing: the token texts concatenate back to `source`.
/// Never fails; bytes that start no known token become one-byte
/// punctuation tokens and unterminated strings/comments run to the end of
/// their line (strings) or the file (block comments).
std::vector<Token> lex(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace solbug
