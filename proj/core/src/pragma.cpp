#include "solbug/pragma.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace solbug {

namespace {

struct PartialVersion {
    CompilerVersion version;
    int parts = 0;  // how many components were written
};

std::optional<PartialVersion> parse_partial(std::string_view text) {
    PartialVersion out;
    int* fields[] = {&out.version.major, &out.version.minor, &out.version.patch};
    std::size_t i = 0;
    while (i <= text.size() && out.parts < 3) {
        if (i == text.size()) {
            break;
        }
        if (text[i] == 'x' || text[i] == 'X' || text[i] == '*') {
            // wildcard: remaining parts unspecified, nothing may follow
            if (i + 1 != text.size()) {
                return std::nullopt;
            }
            return out.parts == 0 ? std::nullopt : std::optional<PartialVersion>(out);
        }
        int value = 0;
        auto [ptr, ec] = std::from_chars(text.data() + i, text.data() + text.size(), value);
        if (ec != std::errc{} || value < 0) {
            return std::nullopt;
        }
        *fields[out.parts++] = value;
        i = static_cast<std::size_t>(ptr - text.data());
        if (i == text.size()) {
            break;
        }
        if (text[i] != '.' || i + 1 == text.size()) {
            return std::nullopt;
        }
        ++i;
    }
    if (out.parts == 0 || i < text.size()) {
        return std::nullopt;
    }
    return out;
}

// Smallest version strictly above every version matching the partial.
CompilerVersion next_after(const PartialVersion& p) {
    CompilerVersion v = p.version;
    switch (p.parts) {
    case 1:
        return {v.major + 1, 0, 0};
    case 2:
        return {v.major, v.minor + 1, 0};
    default:
        return {v.major, v.minor, v.patch + 1};
    }
}

PragmaConstraint make_range(std::optional<CompilerVersion> lo, std::optional<CompilerVersion> hi) {
    PragmaConstraint c;
    c.lower = lo;
    c.upper = hi;
    if (lo && hi && !(*lo < *hi)) {
        c.lower.reset();
        c.upper.reset();
        c.unsatisfiable = true;
    }
    return c;
}

std::optional<PragmaConstraint> parse_clause(std::string_view op, std::string_view ver) {
    auto partial = parse_partial(ver);
    if (!partial) {
        return std::nullopt;
    }
    const CompilerVersion v = partial->version;
    if (op.empty() || op == "=") {
        return make_range(v, next_after(*partial));
    }
    if (op == "^" || op == "~") {
        // same minor series
        if (partial->parts == 1) {
            return make_range(v, CompilerVersion{v.major + 1, 0, 0});
        }
        return make_range(v, CompilerVersion{v.major, v.minor + 1, 0});
    }
    if (op == ">=") {
        return make_range(v, std::nullopt);
    }
    if (op == ">") {
        return make_range(next_after(*partial), std::nullopt);
    }
    if (op == "<") {
        return make_range(std::nullopt, v);
    }
    if (op == "<=") {
        return make_range(std::nullopt, next_after(*partial));
    }
    return std::nullopt;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_op_char(char c) {
    return c == '^' || c == '~' || c == '>' || c == '<' || c == '=';
}

// One alternative: whitespace separated clauses, each an optional operator
// followed by a version. The operator may be detached ("^ 0.4.24").
PragmaConstraint parse_conjunction(std::string_view text, std::vector<std::string>* diagnostics) {
    PragmaConstraint acc = PragmaConstraint::unbounded();
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        if (i >= text.size()) {
            break;
        }
        std::size_t op_start = i;
        while (i < text.size() && is_op_char(text[i])) {
            ++i;
        }
        std::string_view op = text.substr(op_start, i - op_start);
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
            ++i;
        }
        std::size_t ver_start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               !is_op_char(text[i])) {
            ++i;
        }
        std::string_view ver = text.substr(ver_start, i - ver_start);
        if (!ver.empty() && (ver.front() == 'v' || ver.front() == 'V')) {
            ver.remove_prefix(1);
        }
        auto clause = parse_clause(op, ver);
        if (!clause) {
            if (diagnostics) {
                diagnostics->push_back("unrecognized version clause '" + std::string(op) +
                                       std::string(ver) + "'");
            }
            if (i == ver_start && i == op_start) {
                ++i;
            }
            continue;
        }
        acc = acc.intersect(*clause);
    }
    return acc;
}

}  // namespace

std::optional<CompilerVersion> CompilerVersion::parse(std::string_view text) {
    auto p = parse_partial(trim(text));
    if (!p || p->parts != 3) {
        return std::nullopt;
    }
    return p->version;
}

std::string CompilerVersion::str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

PragmaConstraint PragmaConstraint::unbounded() {
    return {};
}

PragmaConstraint PragmaConstraint::parse(std::string_view text, std::vector<std::string>* diagnostics) {
    text = trim(text);
    PragmaConstraint result;
    if (text.empty() || text == "*") {
        result.raw_text = std::string(text);
        return result;
    }

    bool first = true;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t bar = text.find("||", start);
        std::string_view alt = text.substr(start, bar == std::string_view::npos ? bar : bar - start);
        PragmaConstraint c = parse_conjunction(alt, diagnostics);
        if (first) {
            result = c;
            first = false;
        } else if (result.unsatisfiable) {
            result = c;
        } else if (!c.unsatisfiable) {
            // hull of the alternatives
            if (!result.lower || !c.lower) {
                result.lower.reset();
            } else {
                result.lower = std::min(*result.lower, *c.lower);
            }
            if (!result.upper || !c.upper) {
                result.upper.reset();
            } else {
                result.upper = std::max(*result.upper, *c.upper);
            }
        }
        if (bar == std::string_view::npos) {
            break;
        }
        start = bar + 2;
    }
    result.raw_text = std::string(text);
    return result;
}

bool PragmaConstraint::contains(const CompilerVersion& v) const {
    if (unsatisfiable) {
        return false;
    }
    if (lower && v < *lower) {
        return false;
    }
    if (upper && !(v < *upper)) {
        return false;
    }
    return true;
}

PragmaConstraint PragmaConstraint::intersect(const PragmaConstraint& other) const {
    if (unsatisfiable || other.unsatisfiable) {
        PragmaConstraint c;
        c.unsatisfiable = true;
        return c;
    }
    std::optional<CompilerVersion> lo = lower;
    if (other.lower && (!lo || *lo < *other.lower)) {
        lo = other.lower;
    }
    std::optional<CompilerVersion> hi = upper;
    if (other.upper && (!hi || *other.upper < *hi)) {
        hi = other.upper;
    }
    return make_range(lo, hi);
}

std::string PragmaConstraint::canonical() const {
    if (unsatisfiable) {
        return "<unsatisfiable>";
    }
    if (!lower && !upper) {
        return "*";
    }
    std::string out;
    if (lower) {
        out += ">=" + lower->str();
    }
    if (upper) {
        if (!out.empty()) {
            out += ' ';
        }
        out += "<" + upper->str();
    }
    return out;
}

bool version_applies(const PragmaConstraint& pragma, const PragmaConstraint& affected) {
    return !pragma.intersect(affected).unsatisfiable;
}

}  // namespace solbug
