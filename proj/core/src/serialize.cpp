#include "solbug/serialize.hpp"

#include <nlohmann/json.hpp>

#include "solbug/error.hpp"
#include "solbug/taxonomy.hpp"

namespace solbug {

using nlohmann::json;

namespace {

json span_json(const Span& s) {
    return {{"start", s.start}, {"end", s.end}};
}

std::string severity_of(const Finding& f, const Catalog& catalog) {
    const BugKind* k = catalog.find(f.bug_id);
    return k ? std::string(to_string(k->severity)) : "unknown";
}

}  // namespace

json finding_to_json(const Finding& f, const Catalog& catalog) {
    json evidence = json::array();
    for (const auto& s : f.evidence) {
        evidence.push_back(span_json(s));
    }
    return {
        {"bug_id", f.bug_id},
        {"severity", severity_of(f, catalog)},
        {"file", f.file},
        {"contract", f.contract},
        {"function", f.function},
        {"span", span_json(f.span)},
        {"message", f.message},
        {"evidence", evidence},
    };
}

std::string findings_to_json(const std::vector<Finding>& findings, const Catalog& catalog) {
    json doc = json::array();
    for (const auto& f : findings) {
        doc.push_back(finding_to_json(f, catalog));
    }
    return doc.dump(2) + "\n";
}

std::string finding_to_text(const Finding& f, const Catalog& catalog) {
    return f.file + ":" + std::to_string(f.span.start) + "-" + std::to_string(f.span.end) + ": " + f.bug_id + " " +
           severity_of(f, catalog) + " " + f.message;
}

std::vector<BugRecord> records_from_json_text(std::string_view text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) {
        throw Error(origin + ": records file must be a JSON array");
    }
    std::vector<BugRecord> out;
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& j = doc[i];
        const std::string where = "record " + std::to_string(i);
        if (!j.is_object()) {
            problems.push_back(where + ": not an object");
            continue;
        }
        auto str = [&](const char* name, bool required) {
            if (!j.contains(name)) {
                if (required) {
                    problems.push_back(where + ": missing field '" + name + "'");
                }
                return std::string();
            }
            if (!j[name].is_string()) {
                problems.push_back(where + ": field '" + std::string(name) + "' must be a string");
                return std::string();
            }
            return j[name].get<std::string>();
        };
        auto strings = [&](const char* name, bool required) {
            std::set<std::string> s;
            if (!j.contains(name)) {
                if (required) {
                    problems.push_back(where + ": missing field '" + name + "'");
                }
                return s;
            }
            if (!j[name].is_array()) {
                problems.push_back(where + ": field '" + std::string(name) + "' must be an array of strings");
                return s;
            }
            for (const auto& x : j[name]) {
                if (!x.is_string()) {
                    problems.push_back(where + ": field '" + std::string(name) + "' must be an array of strings");
                    break;
                }
                s.insert(x.get<std::string>());
            }
            return s;
        };
        BugRecord r;
        r.source = str("source", false);
        r.name = str("name", true);
        r.behavior = str("behavior", true);
        r.consequences = strings("consequences", true);
        r.aliases = strings("aliases", false);
        if (j.contains("renamed")) {
            if (j["renamed"].is_boolean()) {
                r.renamed = j["renamed"].get<bool>();
            } else {
                problems.push_back(where + ": field 'renamed' must be a boolean");
            }
        }
        if (j.contains("name") && r.name.empty()) {
            problems.push_back(where + ": empty name");
        }
        if (j.contains("behavior") && normalize_key(r.behavior).empty()) {
            problems.push_back(where + ": empty behavior");
        }
        if (j.contains("consequences") && r.consequences.empty()) {
            problems.push_back(where + ": consequences must not be empty");
        }
        out.push_back(std::move(r));
    }
    if (!problems.empty()) {
        throw Error(origin + ": invalid bug records", std::move(problems));
    }
    return out;
}

std::string records_to_json(const std::vector<BugRecord>& records) {
    json doc = json::array();
    for (const auto& r : records) {
        doc.push_back({
            {"source", r.source},
            {"name", r.name},
            {"behavior", r.behavior},
            {"consequences", r.consequences},
            {"aliases", r.aliases},
            {"renamed", r.renamed},
        });
    }
    return doc.dump(2) + "\n";
}

}  // namespace solbug
