#include "solbug/lexer.hpp"

#include <algorithm>
#include <cctype>
#include <iterator>

namespace solbug {

namespace {

constexpr std::string_view kKeywords[] = {
    "abstract", "address", "anonymous", "as", "assembly", "assert", "bool", "break",
    "byte", "bytes", "calldata", "catch", "constant", "constructor", "continue", "contract",
    "delete", "do", "else", "emit", "enum", "event", "external", "fallback",
    "false", "for", "function", "if", "immutable", "import", "indexed", "int",
    "interface", "internal", "is", "library", "mapping", "memory", "modifier", "new",
    "override", "payable", "pragma", "private", "public", "pure", "receive", "require",
    "return", "returns", "revert", "storage", "string", "struct", "this", "throw",
    "true", "try", "uint", "unchecked", "using", "var", "view", "virtual",
    "while", "ether", "wei", "finney", "szabo", "error",
};

// Longest first so that the greedy match picks "<<=" over "<<".
constexpr std::string_view kOperators[] = {
    ">>>=", "<<=", ">>=", ">>>", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "|=",
    "&=",   "^=",  "&&",  "||",  "++", "--", "=>", "<<", ">>", "**", "->", ":=", "..",
};

bool ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$';
}

bool ident_char(unsigned char c) {
    return ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(unsigned char c) {
    return c >= '0' && c <= '9';
}

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::string_view to_string(TokenKind kind) {
    switch (kind) {
    case TokenKind::Identifier:
        return "identifier";
    case TokenKind::Keyword:
        return "keyword";
    case TokenKind::Number:
        return "number";
    case TokenKind::String:
        return "string";
    case TokenKind::Punctuation:
        return "punctuation";
    case TokenKind::Comment:
        return "comment";
    case TokenKind::Whitespace:
        return "whitespace";
    }
    return "unknown";
}

bool is_keyword(std::string_view word) {
    if (std::find(std::begin(kKeywords), std::end(kKeywords), word) != std::end(kKeywords)) {
        return true;
    }
    // sized elementary types: uint8..uint256, int8..int256, bytes1..bytes32
    for (std::string_view prefix : {"uint", "int", "bytes"}) {
        if (word.size() > prefix.size() && word.substr(0, prefix.size()) == prefix &&
            std::all_of(word.begin() + static_cast<std::ptrdiff_t>(prefix.size()), word.end(),
                        [](char c) { return is_digit(static_cast<unsigned char>(c)); })) {
            return true;
        }
    }
    return false;
}

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    const std::size_t n = src.size();
    std::size_t i = 0;

    auto emit = [&](TokenKind kind, std::size_t start, std::size_t end) {
        out.push_back(Token{kind, std::string(src.substr(start, end - start)), Span{start, end}});
    };

    while (i < n) {
        const std::size_t start = i;
        const auto c = static_cast<unsigned char>(src[i]);

        if (is_space(c)) {
            while (i < n && is_space(static_cast<unsigned char>(src[i]))) {
                ++i;
            }
            emit(TokenKind::Whitespace, start, i);
            continue;
        }

        if (c == '/' && i + 1 < n && src[i + 1] == '/') {
            while (i < n && src[i] != '\n') {
                ++i;
            }
            emit(TokenKind::Comment, start, i);
            continue;
        }

        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            std::size_t close = src.find("*/", i + 2);
            i = close == std::string_view::npos ? n : close + 2;
            emit(TokenKind::Comment, start, i);
            continue;
        }

        if (c == '"' || c == '\'') {
            ++i;
            while (i < n && src[i] != static_cast<char>(c) && src[i] != '\n') {
                if (src[i] == '\\' && i + 1 < n && src[i + 1] != '\n') {
                    ++i;
                }
                ++i;
            }
            if (i < n && src[i] == static_cast<char>(c)) {
                ++i;
            }
            emit(TokenKind::String, start, i);
            continue;
        }

        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(src[i + 1])))) {
            if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
                i += 2;
                while (i < n && (std::isxdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
                    ++i;
                }
            } else {
                while (i < n && (is_digit(static_cast<unsigned char>(src[i])) || src[i] == '_' ||
                                 src[i] == '.')) {
                    // a dot belongs to the number only when a digit follows ("arr[0].x")
                    if (src[i] == '.' &&
                        !(i + 1 < n && is_digit(static_cast<unsigned char>(src[i + 1])))) {
                        break;
                    }
                    ++i;
                }
                if (i < n && (src[i] == 'e' || src[i] == 'E')) {
                    std::size_t j = i + 1;
                    if (j < n && src[j] == '-') {
                        ++j;
                    }
                    if (j < n && is_digit(static_cast<unsigned char>(src[j]))) {
                        i = j;
                        while (i < n && is_digit(static_cast<unsigned char>(src[i]))) {
                            ++i;
                        }
                    }
                }
            }
            emit(TokenKind::Number, start, i);
            continue;
        }

        if (ident_start(c)) {
            while (i < n && ident_char(static_cast<unsigned char>(src[i]))) {
                ++i;
            }
            std::string_view word = src.substr(start, i - start);
            emit(is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, start, i);
            continue;
        }

        std::size_t len = 1;
        for (std::string_view op : kOperators) {
            if (src.substr(i, op.size()) == op) {
                len = op.size();
                break;
            }
        }
        i += len;
        emit(TokenKind::Punctuation, start, i);
    }
    return out;
}

}  // namespace solbug
