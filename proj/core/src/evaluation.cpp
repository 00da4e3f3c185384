#include "solbug/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "solbug/error.hpp"
#include "solbug/parser.hpp"
#include "solbug/taxonomy.hpp"

namespace solbug {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(std::string("cannot read ") + what + " '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string translate(const std::string& id, const IdMap* id_map) {
    if (id_map) {
        if (auto it = id_map->find(id); it != id_map->end()) {
            return it->second;
        }
    }
    return id;
}

json metric(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string metric_text(const std::optional<double>& v) {
    if (!v) {
        return "undefined";
    }
    std::ostringstream out;
    out << std::fixed << std::setprecision(4) << *v;
    return out.str();
}

std::optional<double> mean(const std::vector<double>& xs) {
    if (xs.empty()) {
        return std::nullopt;
    }
    double sum = 0.0;
    for (double x : xs) {
        sum += x;
    }
    return sum / static_cast<double>(xs.size());
}

MetricsView make_view(std::string name, const std::vector<CorpusEntry>& entries,
                      const std::vector<ToolFinding>& findings, std::vector<std::string>* warnings) {
    MatchResult m = match(findings, entries);
    if (warnings) {
        warnings->insert(warnings->end(), m.warnings.begin(), m.warnings.end());
    }
    MetricsView v;
    v.name = std::move(name);
    v.entries = entries.size();
    v.counts = m.total;
    v.per_kind = std::move(m.per_kind);
    v.micro_precision = precision(v.counts);
    v.micro_recall = recall(v.counts);
    std::vector<double> ps;
    std::vector<double> rs;
    for (const auto& [_, c] : v.per_kind) {
        if (auto p = precision(c)) {
            ps.push_back(*p);
        }
        if (auto r = recall(c)) {
            rs.push_back(*r);
        }
    }
    v.macro_precision = mean(ps);
    v.macro_recall = mean(rs);
    return v;
}

json view_json(const MetricsView& v) {
    json kinds = json::object();
    for (const auto& [id, c] : v.per_kind) {
        kinds[id] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", metric(precision(c))},
                     {"recall", metric(recall(c))}};
    }
    return {
        {"name", v.name},
        {"entries", v.entries},
        {"counts", {{"tp", v.counts.tp}, {"fp", v.counts.fp}, {"fn", v.counts.fn}}},
        {"micro", {{"precision", metric(v.micro_precision)}, {"recall", metric(v.micro_recall)}}},
        {"macro", {{"precision", metric(v.macro_precision)}, {"recall", metric(v.macro_recall)}}},
        {"per_kind", kinds},
    };
}

}  // namespace

IdMap id_map_from_json_text(std::string_view text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(origin + ": id map must be an object of foreign name -> catalog id");
    }
    IdMap out;
    std::vector<std::string> problems;
    for (const auto& [k, v] : doc.items()) {
        if (!v.is_string()) {
            problems.push_back("'" + k + "' must map to a string");
            continue;
        }
        out[k] = v.get<std::string>();
    }
    if (!problems.empty()) {
        throw Error(origin + ": invalid id map", std::move(problems));
    }
    return out;
}

IdMap load_id_map(const std::filesystem::path& path) {
    return id_map_from_json_text(read_text(path, "id map"), path.string());
}

ToolReport ToolReport::from_json_text(std::string_view text, const Catalog& catalog, const IdMap* id_map,
                                      std::vector<std::string>* warnings, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(origin + ": invalid JSON: " + e.what());
    }
    std::vector<std::string> problems;
    if (!doc.is_object()) {
        throw Error(origin + ": report must be a JSON object");
    }
    ToolReport r;
    if (!doc.contains("tool_name") || !doc["tool_name"].is_string()) {
        problems.push_back("missing string field 'tool_name'");
    } else {
        r.tool_name = doc["tool_name"].get<std::string>();
    }
    if (!doc.contains("claims") || !doc["claims"].is_array()) {
        problems.push_back("missing array field 'claims'");
    } else {
        for (const auto& c : doc["claims"]) {
            if (!c.is_string()) {
                problems.push_back("claims must be strings");
                continue;
            }
            std::string id = translate(c.get<std::string>(), id_map);
            if (!catalog.contains(id)) {
                if (warnings) {
                    warnings->push_back("dropping claim '" + c.get<std::string>() + "': not a catalog id");
                }
                continue;
            }
            r.claims.insert(id);
        }
    }
    if (!doc.contains("findings") || !doc["findings"].is_array()) {
        problems.push_back("missing array field 'findings'");
    } else {
        std::size_t i = 0;
        for (const auto& f : doc["findings"]) {
            std::string where = "findings[" + std::to_string(i++) + "]";
            if (!f.is_object() || !f.contains("file") || !f["file"].is_string() || !f.contains("bug_id") ||
                !f["bug_id"].is_string()) {
                problems.push_back(where + ": needs string fields 'file' and 'bug_id'");
                continue;
            }
            std::string raw = f["bug_id"].get<std::string>();
            std::string id = translate(raw, id_map);
            if (!catalog.contains(id)) {
                problems.push_back(where + ": unknown bug id '" + raw + "' (add it to an id map)");
                continue;
            }
            r.findings.push_back({f["file"].get<std::string>(), id});
        }
    }
    if (!problems.empty()) {
        throw Error(origin + ": invalid tool report", std::move(problems));
    }
    return r;
}

ToolReport ToolReport::load(const std::filesystem::path& path, const Catalog& catalog, const IdMap* id_map,
                            std::vector<std::string>* warnings) {
    return from_json_text(read_text(path, "tool report"), catalog, id_map, warnings, path.string());
}

std::optional<double> precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

std::optional<double> recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double coverage(const std::set<std::string>& claims, const Catalog& catalog, std::vector<std::string>* warnings) {
    std::size_t known = 0;
    for (const auto& id : claims) {
        if (catalog.contains(id)) {
            ++known;
        } else if (warnings) {
            warnings->push_back("claim '" + id + "' is not a catalog id; ignored for coverage");
        }
    }
    if (catalog.size() == 0) {
        return 0.0;
    }
    return static_cast<double>(known) / static_cast<double>(catalog.size());
}

MatchResult match(const std::vector<ToolFinding>& findings, const std::vector<CorpusEntry>& entries) {
    MatchResult out;
    std::map<std::string, const CorpusEntry*> by_path;
    for (const auto& e : entries) {
        by_path[e.path] = &e;
    }
    std::set<ToolFinding> reported;
    std::set<std::string> outside;
    for (const auto& f : findings) {
        if (!by_path.count(f.file)) {
            outside.insert(f.file);
            continue;
        }
        reported.insert(f);
    }
    for (const auto& file : outside) {
        out.warnings.push_back("finding on '" + file + "' which is not in the evaluated entries; excluded");
    }
    for (const auto& e : entries) {
        for (const auto& label : e.labels) {
            ConfusionCounts& k = out.per_kind[label];
            if (reported.count({e.path, label})) {
                ++k.tp;
            } else {
                ++k.fn;
            }
        }
    }
    for (const auto& f : reported) {
        if (!by_path.at(f.file)->labels.count(f.bug_id)) {
            ++out.per_kind[f.bug_id].fp;
        }
    }
    for (const auto& [_, c] : out.per_kind) {
        out.total += c;
    }
    return out;
}

std::optional<std::string> normalize_finding_path(const CorpusManifest& manifest, std::string_view file) {
    namespace fs = std::filesystem;
    fs::path p(file);
    std::string direct = p.lexically_normal().generic_string();
    if (p.is_relative() && manifest.find(direct)) {
        return direct;
    }
    std::error_code ec;
    fs::path abs = fs::weakly_canonical(p, ec);
    if (ec) {
        return std::nullopt;
    }
    fs::path base = fs::weakly_canonical(manifest.base_dir().empty() ? fs::path(".") : manifest.base_dir(), ec);
    if (ec) {
        return std::nullopt;
    }
    std::string rel = abs.lexically_relative(base).generic_string();
    if (!rel.empty() && manifest.find(rel)) {
        return rel;
    }
    return std::nullopt;
}

MetricsReport evaluate(const ToolReport& tool, const CorpusManifest& manifest, const Catalog& catalog,
                       bool split_crafted) {
    MetricsReport r;
    r.tool_name = tool.tool_name;
    for (const auto& id : tool.claims) {
        if (catalog.contains(id)) {
            r.claims.insert(id);
        }
    }
    r.coverage = coverage(tool.claims, catalog, &r.warnings);

    // evaluation scope: entries concerning a claimed kind, labels restricted to claims
    std::vector<CorpusEntry> scope;
    for (const auto& e : manifest.entries()) {
        bool relevant = std::any_of(r.claims.begin(), r.claims.end(), [&](const std::string& id) { return e.concerns(id); });
        if (!relevant) {
            continue;
        }
        CorpusEntry s = e;
        std::erase_if(s.labels, [&](const std::string& id) { return !r.claims.count(id); });
        scope.push_back(std::move(s));
    }

    std::vector<ToolFinding> findings;
    std::set<std::string> unclaimed;
    std::set<std::string> outside;
    for (const auto& f : tool.findings) {
        auto path = normalize_finding_path(manifest, f.file);
        if (!path) {
            outside.insert(f.file);
            continue;
        }
        if (!r.claims.count(f.bug_id)) {
            unclaimed.insert(f.bug_id);
            continue;
        }
        findings.push_back({*path, f.bug_id});
    }
    for (const auto& file : outside) {
        r.warnings.push_back("finding on '" + file + "' which is not in the manifest; excluded");
    }
    for (const auto& id : unclaimed) {
        r.warnings.push_back("findings for unclaimed kind '" + id + "' ignored");
    }

    std::vector<std::string> match_warnings;
    r.overall = make_view("all", scope, findings, &match_warnings);
    if (split_crafted) {
        std::vector<CorpusEntry> plain;
        std::vector<CorpusEntry> crafted;
        for (const auto& e : scope) {
            (e.kind == EntryKind::Crafted ? crafted : plain).push_back(e);
        }
        // findings on the other half are simply outside each view
        auto keep = [&](const std::vector<CorpusEntry>& es) {
            std::set<std::string> paths;
            for (const auto& e : es) {
                paths.insert(e.path);
            }
            std::vector<ToolFinding> out;
            std::copy_if(findings.begin(), findings.end(), std::back_inserter(out),
                         [&](const ToolFinding& f) { return paths.count(f.file) > 0; });
            return out;
        };
        r.split.push_back(make_view("non-crafted", plain, keep(plain), nullptr));
        r.split.push_back(make_view("crafted", crafted, keep(crafted), nullptr));
    }
    // findings on manifest entries outside the scope
    std::set<std::string> seen(match_warnings.begin(), match_warnings.end());
    r.warnings.insert(r.warnings.end(), seen.begin(), seen.end());
    return r;
}

std::string MetricsReport::to_json() const {
    json doc;
    doc["tool_name"] = tool_name;
    doc["claims"] = claims;
    doc["coverage"] = coverage;
    doc["overall"] = view_json(overall);
    doc["split"] = json::array();
    for (const auto& v : split) {
        doc["split"].push_back(view_json(v));
    }
    doc["warnings"] = warnings;
    return doc.dump(2) + "\n";
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << "tool: " << tool_name << "\n";
    out << "claims: " << claims.size() << "\n";
    out << "coverage: " << std::fixed << std::setprecision(4) << coverage << "\n";

    struct Row {
        std::string view, kind, tp, fp, fn, precision, recall;
    };
    std::vector<Row> rows;
    rows.push_back({"view", "kind", "tp", "fp", "fn", "precision", "recall"});
    auto add_view = [&](const MetricsView& v) {
        for (const auto& [id, c] : v.per_kind) {
            rows.push_back({v.name, id, std::to_string(c.tp), std::to_string(c.fp), std::to_string(c.fn),
                            metric_text(precision(c)), metric_text(recall(c))});
        }
        rows.push_back({v.name, "micro", std::to_string(v.counts.tp), std::to_string(v.counts.fp),
                        std::to_string(v.counts.fn), metric_text(v.micro_precision), metric_text(v.micro_recall)});
        rows.push_back({v.name, "macro", "", "", "", metric_text(v.macro_precision), metric_text(v.macro_recall)});
    };
    add_view(overall);
    for (const auto& v : split) {
        add_view(v);
    }

    std::size_t w[7] = {};
    for (const auto& r : rows) {
        const std::string* cells[7] = {&r.view, &r.kind, &r.tp, &r.fp, &r.fn, &r.precision, &r.recall};
        for (int i = 0; i < 7; ++i) {
            w[i] = std::max(w[i], cells[i]->size());
        }
    }
    for (const auto& r : rows) {
        const std::string* cells[7] = {&r.view, &r.kind, &r.tp, &r.fp, &r.fn, &r.precision, &r.recall};
        std::string line;
        for (int i = 0; i < 7; ++i) {
            bool numeric = i >= 2;
            std::string cell = *cells[i];
            std::string pad(w[i] - cell.size(), ' ');
            line += numeric ? pad + cell : cell + pad;
            if (i < 6) {
                line += "  ";
            }
        }
        while (!line.empty() && line.back() == ' ') {
            line.pop_back();
        }
        out << line << "\n";
    }
    for (const auto& wmsg : warnings) {
        out << "warning: " << wmsg << "\n";
    }
    return out.str();
}

ToolReport run_builtin_tool(const CorpusManifest& manifest, const DetectOptions& options) {
    ToolReport r;
    r.tool_name = "solbug";
    for (const auto& s : detector_specs()) {
        r.claims.insert(s.bug_id);
    }
    for (const auto& e : manifest.entries()) {
        SourceModel model = parse_file(manifest.resolve(e).string());
        for (const auto& f : detect_all(model, r.claims, options)) {
            r.findings.push_back({e.path, f.bug_id});
        }
    }
    return r;
}

}  // namespace solbug
