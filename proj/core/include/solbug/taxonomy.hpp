#pragma once

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "solbug/pragma.hpp"

namespace solbug {

enum class Severity { Low, Middle, High, Critical };
enum class EffectClass { Functionality, Performance, Security, Serviceability };
enum class Certainty { May, Must };

std::string_view to_string(Severity s);
std::string_view to_string(EffectClass e);
std::string_view to_string(Certainty c);
std::optional<Severity> parse_severity(std::string_view s);
std::optional<EffectClass> parse_effect_class(std::string_view s);
std::optional<Certainty> parse_certainty(std::string_view s);

struct Effect {
    EffectClass effect = EffectClass::Functionality;
    Certainty certainty = Certainty::May;

    auto operator<=>(const Effect&) const = default;
};

/// Grades a set of effects with the four-level rubric:
///   Critical  must affect security
///   High      may affect security, or must affect functionality
///   Middle    may affect functionality, or must affect performance
///   Low       may affect performance, or must affect serviceability
/// The first matching level wins. Returns nullopt when nothing in the set
/// is covered by the rubric (for example serviceability/may alone).
std::optional<Severity> grade_severity(std::span<const Effect> effects);

struct Category {
    char id = 'A';
    std::string name;
    std::string definition;
};

struct BugKind {
    std::string id;  // "<category>-<subcategory>-<short name>", e.g. "D-a-R"
    std::string display_name;
    bool name_verified = false;  // false: best-effort expansion of the abbreviation
    char category = 'A';
    char subcategory = 'a';
    std::string short_name;
    Severity severity = Severity::Low;
    std::vector<Effect> effects;
    PragmaConstraint affected_versions;
    bool has_detector = false;
    std::string criteria_text;
};

/// Splits an id of the form "A-b-XYZ". Returns false for malformed ids.
bool split_bug_id(std::string_view id, char& category, char& subcategory, std::string& short_name);

/// The bug-kind catalog. Immutable after construction.
class Catalog {
public:
    /// Parses catalog JSON and validates it; throws solbug::Error listing
    /// every violation.
    static Catalog from_json_text(std::string_view text, std::string origin = "<catalog>");
    static Catalog load(const std::string& path);

    /// The catalog data file embedded at build time.
    static const Catalog& builtin();

    const std::string& version() const { return version_; }
    const std::vector<Category>& categories() const { return categories_; }
    /// Sorted by id.
    const std::vector<BugKind>& kinds() const { return kinds_; }

    const BugKind* find(std::string_view id) const;
    const Category* category(char id) const;
    std::vector<const BugKind*> in_category(char id) const;
    std::vector<std::string> detectable_ids() const;
    bool contains(std::string_view id) const { return find(id) != nullptr; }
    std::size_t size() const { return kinds_.size(); }

    std::string to_json() const;

private:
    static Catalog from_document(const nlohmann::json& doc, const std::string& origin);

    std::string version_;
    std::vector<Category> categories_;
    std::vector<BugKind> kinds_;
};

/// All kinds of the builtin catalog, ordered by id.
const std::vector<BugKind>& catalog();

inline constexpr std::size_t kCatalogKindCount = 49;
inline constexpr std::size_t kCategoryCount = 9;

}  // namespace solbug
