#include "solbug/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "solbug/error.hpp"

namespace solbug {

namespace detail {
extern const char* const kBuiltinCatalogJson;
}

std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::Low:
        return "Low";
    case Severity::Middle:
        return "Middle";
    case Severity::High:
        return "High";
    case Severity::Critical:
        return "Critical";
    }
    return "Low";
}

std::string_view to_string(EffectClass e) {
    switch (e) {
    case EffectClass::Functionality:
        return "Functionality";
    case EffectClass::Performance:
        return "Performance";
    case EffectClass::Security:
        return "Security";
    case EffectClass::Serviceability:
        return "Serviceability";
    }
    return "Functionality";
}

std::string_view to_string(Certainty c) {
    return c == Certainty::Must ? "must" : "may";
}

std::optional<Severity> parse_severity(std::string_view s) {
    for (Severity v : {Severity::Low, Severity::Middle, Severity::High, Severity::Critical}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    // accept lower-case spellings on the command line
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (Severity v : {Severity::Low, Severity::Middle, Severity::High, Severity::Critical}) {
        std::string name(to_string(v));
        std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
        if (name == lower) {
            return v;
        }
    }
    return std::nullopt;
}

std::optional<EffectClass> parse_effect_class(std::string_view s) {
    for (EffectClass v :
         {EffectClass::Functionality, EffectClass::Performance, EffectClass::Security, EffectClass::Serviceability}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    return std::nullopt;
}

std::optional<Certainty> parse_certainty(std::string_view s) {
    if (s == "may") {
        return Certainty::May;
    }
    if (s == "must") {
        return Certainty::Must;
    }
    return std::nullopt;
}

std::optional<Severity> grade_severity(std::span<const Effect> effects) {
    auto has = [&](EffectClass e, Certainty c) {
        return std::find(effects.begin(), effects.end(), Effect{e, c}) != effects.end();
    };
    if (has(EffectClass::Security, Certainty::Must)) {
        return Severity::Critical;
    }
    if (has(EffectClass::Security, Certainty::May) || has(EffectClass::Functionality, Certainty::Must)) {
        return Severity::High;
    }
    if (has(EffectClass::Functionality, Certainty::May) || has(EffectClass::Performance, Certainty::Must)) {
        return Severity::Middle;
    }
    if (has(EffectClass::Performance, Certainty::May) || has(EffectClass::Serviceability, Certainty::Must)) {
        return Severity::Low;
    }
    return std::nullopt;
}

bool split_bug_id(std::string_view id, char& category, char& subcategory, std::string& short_name) {
    if (id.size() < 5 || id[1] != '-' || id[3] != '-') {
        return false;
    }
    if (id[0] < 'A' || id[0] > 'I' || id[2] < 'a' || id[2] > 'z') {
        return false;
    }
    std::string_view rest = id.substr(4);
    if (!std::all_of(rest.begin(), rest.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); })) {
        return false;
    }
    category = id[0];
    subcategory = id[2];
    short_name = std::string(rest);
    return true;
}

Catalog Catalog::from_json_text(std::string_view text, std::string origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    try {
        return from_document(doc, origin);
    } catch (const nlohmann::json::exception& e) {
        throw Error(origin + ": malformed catalog: " + e.what());
    }
}

Catalog Catalog::from_document(const nlohmann::json& doc, const std::string& origin) {
    std::vector<std::string> problems;
    Catalog cat;
    if (!doc.is_object() || !doc.contains("catalog_version") || !doc["catalog_version"].is_string()) {
        throw Error(origin + ": missing string field 'catalog_version'");
    }
    cat.version_ = doc["catalog_version"].get<std::string>();

    for (const auto& c : doc.value("categories", nlohmann::json::array())) {
        std::string id = c.value("id", "");
        if (id.size() != 1 || id[0] < 'A' || id[0] > 'I') {
            problems.push_back("category with invalid id '" + id + "'");
            continue;
        }
        cat.categories_.push_back(Category{id[0], c.value("name", ""), c.value("definition", "")});
    }
    if (cat.categories_.size() != kCategoryCount) {
        problems.push_back("expected " + std::to_string(kCategoryCount) + " categories, found " +
                           std::to_string(cat.categories_.size()));
    }

    std::set<std::string> seen;
    for (const auto& k : doc.value("kinds", nlohmann::json::array())) {
        BugKind kind;
        kind.id = k.value("id", "");
        const std::string where = "kind '" + kind.id + "'";
        if (!split_bug_id(kind.id, kind.category, kind.subcategory, kind.short_name)) {
            problems.push_back(where + ": id does not follow <category>-<subcategory>-<short name>");
            continue;
        }
        if (!seen.insert(kind.id).second) {
            problems.push_back(where + ": duplicate id");
        }
        if (k.value("category", "") != std::string(1, kind.category) ||
            k.value("subcategory", "") != std::string(1, kind.subcategory)) {
            problems.push_back(where + ": category fields disagree with the id");
        }
        kind.display_name = k.value("display_name", kind.id);
        kind.name_verified = k.value("name_verified", false);
        kind.has_detector = k.value("has_detector", false);
        kind.criteria_text = k.value("criteria_text", "");

        std::vector<std::string> version_problems;
        kind.affected_versions = PragmaConstraint::parse(k.value("affected_versions", "*"), &version_problems);
        for (auto& p : version_problems) {
            problems.push_back(where + ": affected_versions: " + p);
        }

        auto sev = parse_severity(k.value("severity", ""));
        if (!sev) {
            problems.push_back(where + ": unknown severity");
            continue;
        }
        kind.severity = *sev;
        for (const auto& e : k.value("effects", nlohmann::json::array())) {
            auto cls = parse_effect_class(e.value("class", ""));
            auto cert = parse_certainty(e.value("certainty", ""));
            if (!cls || !cert) {
                problems.push_back(where + ": malformed effect");
                continue;
            }
            kind.effects.push_back(Effect{*cls, *cert});
        }
        auto graded = grade_severity(kind.effects);
        if (!graded) {
            problems.push_back(where + ": effects are ungradeable");
        } else if (*graded != kind.severity) {
            problems.push_back(where + ": severity " + std::string(to_string(kind.severity)) +
                               " disagrees with graded effects (" + std::string(to_string(*graded)) + ")");
        }
        if (!cat.category(kind.category)) {
            problems.push_back(where + ": unknown category");
        }
        cat.kinds_.push_back(std::move(kind));
    }
    if (cat.kinds_.size() != kCatalogKindCount) {
        problems.push_back("expected " + std::to_string(kCatalogKindCount) + " kinds, found " +
                           std::to_string(cat.kinds_.size()));
    }
    if (!problems.empty()) {
        throw Error(origin + ": invalid catalog", std::move(problems));
    }
    std::sort(cat.kinds_.begin(), cat.kinds_.end(), [](const BugKind& a, const BugKind& b) { return a.id < b.id; });
    std::sort(cat.categories_.begin(), cat.categories_.end(),
              [](const Category& a, const Category& b) { return a.id < b.id; });
    return cat;
}

Catalog Catalog::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read catalog '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str(), path);
}

const Catalog& Catalog::builtin() {
    static const Catalog instance = from_json_text(detail::kBuiltinCatalogJson, "<builtin catalog>");
    return instance;
}

const BugKind* Catalog::find(std::string_view id) const {
    auto it = std::lower_bound(kinds_.begin(), kinds_.end(), id,
                               [](const BugKind& k, std::string_view v) { return k.id < v; });
    return (it != kinds_.end() && it->id == id) ? &*it : nullptr;
}

const Category* Catalog::category(char id) const {
    for (const auto& c : categories_) {
        if (c.id == id) {
            return &c;
        }
    }
    return nullptr;
}

std::vector<const BugKind*> Catalog::in_category(char id) const {
    std::vector<const BugKind*> out;
    for (const auto& k : kinds_) {
        if (k.category == id) {
            out.push_back(&k);
        }
    }
    return out;
}

std::vector<std::string> Catalog::detectable_ids() const {
    std::vector<std::string> out;
    for (const auto& k : kinds_) {
        if (k.has_detector) {
            out.push_back(k.id);
        }
    }
    return out;
}

std::string Catalog::to_json() const {
    nlohmann::json doc;
    doc["catalog_version"] = version_;
    doc["categories"] = nlohmann::json::array();
    for (const auto& c : categories_) {
        doc["categories"].push_back({{"id", std::string(1, c.id)}, {"name", c.name}, {"definition", c.definition}});
    }
    doc["kinds"] = nlohmann::json::array();
    for (const auto& k : kinds_) {
        nlohmann::json effects = nlohmann::json::array();
        for (const auto& e : k.effects) {
            effects.push_back({{"class", to_string(e.effect)}, {"certainty", to_string(e.certainty)}});
        }
        doc["kinds"].push_back({
            {"id", k.id},
            {"display_name", k.display_name},
            {"name_verified", k.name_verified},
            {"category", std::string(1, k.category)},
            {"subcategory", std::string(1, k.subcategory)},
            {"severity", to_string(k.severity)},
            {"effects", effects},
            {"affected_versions", k.affected_versions.raw_text.empty() ? "*" : k.affected_versions.raw_text},
            {"has_detector", k.has_detector},
            {"criteria_text", k.criteria_text},
        });
    }
    return doc.dump(2);
}

const std::vector<BugKind>& catalog() {
    return Catalog::builtin().kinds();
}

}  // namespace solbug
