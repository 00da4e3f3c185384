#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace solbug::expr {

/// Expression text with all whitespace and comments removed, used for
/// syntactic equality between operands.
std::string squash(std::string_view text);

/// Splits at top-level (depth 0) occurrences of the operator token `sep`.
std::vector<std::string> split_top_level(std::string_view text, std::string_view sep);

/// Drops balanced outer parentheses: "((a == b))" -> "a == b".
std::string strip_parens(std::string_view text);

struct Comparison {
    std::string lhs;  // squashed
    std::string op;   // ==, !=, <, <=, >, >=
    std::string rhs;  // squashed

    /// Same comparison with operands swapped ("0 < x" -> "x > 0").
    Comparison flipped() const;
};

/// Comparisons appearing as operands of the top-level && / || chain of a
/// condition. Negated or nested forms are not decomposed further.
std::vector<Comparison> comparisons(std::string_view condition);

/// First identifier of a path expression: "balances[msg.sender].x" -> "balances".
std::string root_identifier(std::string_view text);

bool is_zero_literal(std::string_view squashed);
bool is_zero_address(std::string_view squashed);

}  // namespace solbug::expr
