#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace solbug {

/// A three-part compiler version such as 0.4.26.
struct CompilerVersion {
    int major = 0;
    int minor = 0;
    int patch = 0;

    auto operator<=>(const CompilerVersion&) const = default;

    /// Accepts "X", "X.Y" or "X.Y.Z"; missing parts default to zero.
    static std::optional<CompilerVersion> parse(std::string_view text);
    std::string str() const;
};

/// Half-open compiler-version range [lower, upper) where either end may be
/// unbounded. An unsatisfiable constraint (from intersecting disjoint
/// clauses) has no bounds and `unsatisfiable` set.
struct PragmaConstraint {
    std::string raw_text;
    std::optional<CompilerVersion> lower;  // inclusive
    std::optional<CompilerVersion> upper;  // exclusive
    bool unsatisfiable = false;

    static PragmaConstraint unbounded();

    /// Parses the text following `pragma solidity`. Supports exact pins,
    /// `^`, `~`, comparison operators, whitespace-separated clauses (all
    /// intersected) and `||` alternatives (hull). Unparseable clauses are
    /// reported through `diagnostics` and ignored.
    static PragmaConstraint parse(std::string_view text,
                                  std::vector<std::string>* diagnostics = nullptr);

    bool is_unbounded() const { return !unsatisfiable && !lower && !upper; }
    bool contains(const CompilerVersion& v) const;
    PragmaConstraint intersect(const PragmaConstraint& other) const;

    /// Canonical rendering, e.g. ">=0.4.24 <0.5.0", "*" when unbounded.
    std::string canonical() const;

    bool operator==(const PragmaConstraint& o) const {
        return lower == o.lower && upper == o.upper && unsatisfiable == o.unsatisfiable;
    }
};

/// True iff some compiler version satisfies both constraints.
bool version_applies(const PragmaConstraint& pragma, const PragmaConstraint& affected);

}  // namespace solbug
