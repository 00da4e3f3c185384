#include "solbug/corpus.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "solbug/error.hpp"
#include "solbug/taxonomy.hpp"

namespace solbug {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownFields = {"path",  "solidity_versions", "kind",  "origin",           "strategy",
                                            "labels", "notes",            "fixes", "expected_findings"};

std::optional<std::set<std::string>> id_set(const json& v, const std::string& where, const std::string& field,
                                            const Catalog& catalog, std::vector<std::string>& problems) {
    if (!v.is_array()) {
        problems.push_back(where + ": '" + field + "' must be an array of bug ids");
        return std::nullopt;
    }
    std::set<std::string> out;
    for (const auto& x : v) {
        if (!x.is_string()) {
            problems.push_back(where + ": '" + field + "' contains a non-string");
            continue;
        }
        std::string id = x.get<std::string>();
        if (!catalog.contains(id)) {
            problems.push_back(where + ": unknown bug id '" + id + "' in '" + field + "'");
        }
        if (!out.insert(id).second) {
            problems.push_back(where + ": duplicate '" + id + "' in '" + field + "'");
        }
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read manifest '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

std::string_view to_string(EntryKind k) {
    switch (k) {
    case EntryKind::Buggy:
        return "buggy";
    case EntryKind::Fixed:
        return "fixed";
    case EntryKind::Crafted:
        return "crafted";
    }
    return "buggy";
}

std::string_view to_string(Origin o) {
    switch (o) {
    case Origin::Unchanged:
        return "unchanged";
    case Origin::Modified:
        return "modified";
    case Origin::Handwritten:
        return "handwritten";
    }
    return "handwritten";
}

std::optional<EntryKind> parse_entry_kind(std::string_view s) {
    for (EntryKind k : {EntryKind::Buggy, EntryKind::Fixed, EntryKind::Crafted}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

std::optional<Origin> parse_origin(std::string_view s) {
    for (Origin o : {Origin::Unchanged, Origin::Modified, Origin::Handwritten}) {
        if (to_string(o) == s) {
            return o;
        }
    }
    return std::nullopt;
}

bool CorpusEntry::concerns(std::string_view bug_id) const {
    return labels.count(std::string(bug_id)) > 0 || (fixes && *fixes == bug_id);
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& path) {
    return load(path, Catalog::builtin());
}

CorpusManifest CorpusManifest::load(const std::filesystem::path& path, const Catalog& catalog) {
    std::string text = read_file(path);
    return from_json_text(text, path.parent_path(), catalog, true, path.string());
}

CorpusManifest CorpusManifest::from_json_text(std::string_view text, const std::filesystem::path& base_dir,
                                              const Catalog& catalog, bool check_files, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) {
        throw Error(origin + ": manifest must be a JSON array of entries");
    }

    CorpusManifest m;
    m.base_dir_ = base_dir;
    std::vector<std::string> problems;
    std::set<std::string> paths;

    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& j = doc[i];
        std::string where = "entry " + std::to_string(i);
        if (!j.is_object()) {
            problems.push_back(where + ": not an object");
            continue;
        }
        if (j.contains("path") && j["path"].is_string()) {
            where += " (" + j["path"].get<std::string>() + ")";
        }
        for (const auto& [key, _] : j.items()) {
            if (!kKnownFields.count(key)) {
                problems.push_back(where + ": unknown field '" + key + "'");
            }
        }
        auto string_field = [&](const char* name, bool required) -> std::optional<std::string> {
            if (!j.contains(name)) {
                if (required) {
                    problems.push_back(where + ": missing field '" + name + "'");
                }
                return std::nullopt;
            }
            if (!j[name].is_string()) {
                problems.push_back(where + ": field '" + std::string(name) + "' must be a string");
                return std::nullopt;
            }
            return j[name].get<std::string>();
        };

        CorpusEntry e;
        if (auto p = string_field("path", true)) {
            e.path = *p;
            if (e.path.empty()) {
                problems.push_back(where + ": empty path");
            } else if (!paths.insert(e.path).second) {
                problems.push_back(where + ": duplicate path");
            } else if (check_files && !std::filesystem::is_regular_file(base_dir / e.path)) {
                problems.push_back(where + ": fixture file not found");
            }
        }
        if (auto v = string_field("solidity_versions", true)) {
            e.solidity_versions = *v;
            std::vector<std::string> diags;
            PragmaConstraint::parse(*v, &diags);
            for (const auto& d : diags) {
                problems.push_back(where + ": solidity_versions: " + d);
            }
        }
        if (auto k = string_field("kind", true)) {
            if (auto parsed = parse_entry_kind(*k)) {
                e.kind = *parsed;
            } else {
                problems.push_back(where + ": kind must be buggy, fixed or crafted");
            }
        }
        if (auto o = string_field("origin", true)) {
            if (auto parsed = parse_origin(*o)) {
                e.origin = *parsed;
            } else {
                problems.push_back(where + ": origin must be unchanged, modified or handwritten");
            }
        }
        if (!j.contains("strategy")) {
            problems.push_back(where + ": missing field 'strategy' (use null when absent)");
        } else if (!j["strategy"].is_null()) {
            if (!j["strategy"].is_number_integer() || j["strategy"].get<int>() < 1 || j["strategy"].get<int>() > 3) {
                problems.push_back(where + ": strategy must be 1, 2, 3 or null");
            } else {
                e.strategy = j["strategy"].get<int>();
            }
        }
        if (!j.contains("labels")) {
            problems.push_back(where + ": missing field 'labels'");
        } else if (auto ls = id_set(j["labels"], where, "labels", catalog, problems)) {
            e.labels = std::move(*ls);
        }
        e.notes = string_field("notes", true).value_or("");
        if (j.contains("fixes")) {
            e.fixes = string_field("fixes", false);
            if (e.fixes && !catalog.contains(*e.fixes)) {
                problems.push_back(where + ": unknown bug id '" + *e.fixes + "' in 'fixes'");
            }
        }
        if (j.contains("expected_findings")) {
            e.expected_findings = id_set(j["expected_findings"], where, "expected_findings", catalog, problems);
        }

        // cross-field invariants
        bool crafted = e.kind == EntryKind::Crafted;
        if (crafted && !e.strategy) {
            problems.push_back(where + ": crafted entries need a strategy (1, 2 or 3)");
        }
        if (!crafted && e.strategy) {
            problems.push_back(where + ": strategy " + std::to_string(*e.strategy) + " given but kind is " +
                               std::string(to_string(e.kind)));
        }
        if (e.kind == EntryKind::Fixed && !e.fixes) {
            problems.push_back(where + ": fixed entries must name the repaired bug in 'fixes'");
        }
        if (e.fixes && e.labels.count(*e.fixes)) {
            problems.push_back(where + ": labeled with the bug it claims to fix ('" + *e.fixes + "')");
        }
        if (e.kind == EntryKind::Buggy && e.labels.empty()) {
            problems.push_back(where + ": buggy entries need at least one label");
        }
        m.entries_.push_back(std::move(e));
    }

    if (!problems.empty()) {
        throw Error(origin + ": invalid manifest", std::move(problems));
    }
    return m;
}

CorpusCounts CorpusManifest::counts() const {
    CorpusCounts c;
    for (const auto& e : entries_) {
        ++c.by_origin[std::string(to_string(e.origin))];
        ++c.by_kind[std::string(to_string(e.kind))];
    }
    return c;
}

const CorpusEntry* CorpusManifest::find(std::string_view path) const {
    for (const auto& e : entries_) {
        if (e.path == path) {
            return &e;
        }
    }
    return nullptr;
}

std::string CorpusManifest::to_json() const {
    json doc = json::array();
    for (const auto& e : entries_) {
        json j;
        j["path"] = e.path;
        j["solidity_versions"] = e.solidity_versions;
        j["kind"] = to_string(e.kind);
        j["origin"] = to_string(e.origin);
        j["strategy"] = e.strategy ? json(*e.strategy) : json(nullptr);
        j["labels"] = e.labels;
        j["notes"] = e.notes;
        if (e.fixes) {
            j["fixes"] = *e.fixes;
        }
        if (e.expected_findings) {
            j["expected_findings"] = *e.expected_findings;
        }
        doc.push_back(std::move(j));
    }
    return doc.dump(2) + "\n";
}

std::vector<CorpusEntry> select(const CorpusManifest& manifest, const CorpusFilter& filter) {
    std::vector<CorpusEntry> out;
    for (const auto& e : manifest.entries()) {
        if (filter.bug_id && !e.concerns(*filter.bug_id)) {
            continue;
        }
        if (filter.kind && e.kind != *filter.kind) {
            continue;
        }
        if (filter.strategy && e.strategy != filter.strategy) {
            continue;
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace solbug
