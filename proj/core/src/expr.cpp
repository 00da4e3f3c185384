#include "solbug/expr.hpp"

#include <algorithm>

#include "solbug/lexer.hpp"

namespace solbug::expr {

namespace {

bool opener(const Token& t) {
    return t.is("(") || t.is("[") || t.is("{");
}

bool closer(const Token& t) {
    return t.is(")") || t.is("]") || t.is("}");
}

std::vector<Token> significant(std::string_view text) {
    std::vector<Token> toks = lex(text);
    std::erase_if(toks, [](const Token& t) { return t.trivia(); });
    return toks;
}

std::string join(const std::vector<Token>& toks, std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
        out += toks[i].text;
    }
    return out;
}

}  // namespace

std::string squash(std::string_view text) {
    auto toks = significant(text);
    return join(toks, 0, toks.size());
}

std::vector<std::string> split_top_level(std::string_view text, std::string_view sep) {
    std::vector<std::string> parts;
    std::vector<Token> toks = lex(text);
    int depth = 0;
    std::size_t piece_start = 0;
    for (const Token& t : toks) {
        if (opener(t)) {
            ++depth;
        } else if (closer(t)) {
            depth = std::max(0, depth - 1);
        } else if (depth == 0 && t.is(sep)) {
            parts.emplace_back(text.substr(piece_start, t.span.start - piece_start));
            piece_start = t.span.end;
        }
    }
    parts.emplace_back(text.substr(piece_start));
    return parts;
}

std::string strip_parens(std::string_view text) {
    auto toks = significant(text);
    std::size_t lo = 0;
    std::size_t hi = toks.size();
    while (hi - lo >= 2 && toks[lo].is("(") && toks[hi - 1].is(")")) {
        // the outer pair must match each other, not "(a) == (b)"
        int depth = 0;
        bool wraps = true;
        for (std::size_t i = lo; i < hi; ++i) {
            if (opener(toks[i])) {
                ++depth;
            } else if (closer(toks[i])) {
                --depth;
                if (depth == 0 && i != hi - 1) {
                    wraps = false;
                    break;
                }
            }
        }
        if (!wraps) {
            break;
        }
        ++lo;
        --hi;
    }
    if (lo == 0 && hi == toks.size()) {
        return std::string(text);
    }
    if (lo >= hi) {
        return {};
    }
    return std::string(text.substr(toks[lo].span.start, toks[hi - 1].span.end - toks[lo].span.start));
}

Comparison Comparison::flipped() const {
    std::string inverse = op;
    if (op == "<") {
        inverse = ">";
    } else if (op == ">") {
        inverse = "<";
    } else if (op == "<=") {
        inverse = ">=";
    } else if (op == ">=") {
        inverse = "<=";
    }
    return Comparison{rhs, inverse, lhs};
}

std::vector<Comparison> comparisons(std::string_view condition) {
    std::vector<Comparison> out;
    std::vector<std::string> pending{strip_parens(condition)};
    while (!pending.empty()) {
        std::string piece = std::move(pending.back());
        pending.pop_back();

        auto ors = split_top_level(piece, "||");
        if (ors.size() > 1) {
            for (auto& p : ors) {
                pending.push_back(strip_parens(p));
            }
            continue;
        }
        auto ands = split_top_level(piece, "&&");
        if (ands.size() > 1) {
            for (auto& p : ands) {
                pending.push_back(strip_parens(p));
            }
            continue;
        }

        auto toks = significant(piece);
        int depth = 0;
        for (std::size_t i = 0; i < toks.size(); ++i) {
            const Token& t = toks[i];
            if (opener(t)) {
                ++depth;
            } else if (closer(t)) {
                depth = std::max(0, depth - 1);
            } else if (depth == 0 && (t.is("==") || t.is("!=") || t.is("<") || t.is("<=") ||
                                      t.is(">") || t.is(">="))) {
                out.push_back(Comparison{join(toks, 0, i), t.text, join(toks, i + 1, toks.size())});
                break;
            }
        }
    }
    return out;
}

std::string root_identifier(std::string_view text) {
    for (const Token& t : lex(text)) {
        if (t.trivia() || t.is("(")) {
            continue;
        }
        if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword) {
            return t.text;
        }
        return {};
    }
    return {};
}

bool is_zero_literal(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    std::string_view digits = s;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
        digits.remove_prefix(2);
    }
    return !digits.empty() &&
           std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0' || c == '_'; });
}

bool is_zero_address(std::string_view s) {
    if (is_zero_literal(s)) {
        return true;
    }
    constexpr std::string_view prefixes[] = {"address(", "addresspayable("};
    for (auto prefix : prefixes) {
        if (s.size() > prefix.size() + 1 && s.substr(0, prefix.size()) == prefix && s.back() == ')') {
            return is_zero_literal(s.substr(prefix.size(), s.size() - prefix.size() - 1));
        }
    }
    return false;
}

}  // namespace solbug::expr
