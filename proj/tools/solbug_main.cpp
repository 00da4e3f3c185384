// solbug: scan Solidity sources, score analyzers against a labeled corpus,
// browse the bug catalog, merge bug records and watch for new projects.

#include <algorithm>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "solbug/collector.hpp"
#include "solbug/corpus.hpp"
#include "solbug/detectors.hpp"
#include "solbug/error.hpp"
#include "solbug/evaluation.hpp"
#include "solbug/merge.hpp"
#include "solbug/parser.hpp"
#include "solbug/serialize.hpp"
#include "solbug/taxonomy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kClean = 0;
constexpr int kFlagged = 1;
constexpr int kUsage = 2;

struct Options {
    std::string catalog_path;

    std::vector<std::string> scan_paths;
    std::string rules = "all";
    std::string format = "text";
    bool strict = false;
    std::string fail_on;
    bool unsigned_to_signed = false;

    std::string corpus;
    std::string tool = "self";
    std::string id_map;
    bool split_crafted = false;
    double min_precision = -1.0;
    double min_recall = -1.0;

    bool list = false;
    std::string category;
    std::string kind;

    std::string records;

    std::string config;
    bool once = false;
    std::string replay;
};

void print_error(const std::exception& e) {
    std::cerr << "solbug: " << e.what() << "\n";
    if (auto* se = dynamic_cast<const solbug::Error*>(&e)) {
        for (const auto& d : se->details()) {
            std::cerr << "  " << d << "\n";
        }
    }
}

const solbug::Catalog& active_catalog(const Options& o) {
    static std::unique_ptr<solbug::Catalog> loaded;
    if (o.catalog_path.empty()) {
        return solbug::Catalog::builtin();
    }
    if (!loaded) {
        loaded = std::make_unique<solbug::Catalog>(solbug::Catalog::load(o.catalog_path));
    }
    return *loaded;
}

std::vector<std::string> split_ids(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

int cmd_scan(const Options& o) {
    const auto& catalog = active_catalog(o);
    std::set<std::string> enabled;
    if (o.rules == "all") {
        for (const auto& s : solbug::detector_specs()) {
            enabled.insert(s.bug_id);
        }
    } else {
        std::vector<std::string> bad;
        for (const auto& id : split_ids(o.rules)) {
            if (!solbug::find_detector(id)) {
                bad.push_back(id);
            }
            enabled.insert(id);
        }
        if (!bad.empty() || enabled.empty()) {
            std::cerr << "solbug: unknown or undetectable rule id(s):";
            for (const auto& id : bad) {
                std::cerr << " " << id;
            }
            std::cerr << "\n  available: ";
            for (const auto& s : solbug::detector_specs()) {
                std::cerr << s.bug_id << " ";
            }
            std::cerr << "\n";
            return kUsage;
        }
    }
    std::optional<solbug::Severity> threshold;
    if (!o.fail_on.empty()) {
        threshold = solbug::parse_severity(o.fail_on);
        if (!threshold) {
            std::cerr << "solbug: --fail-on expects Low, Middle, High or Critical\n";
            return kUsage;
        }
    }

    // expand directories to the .sol files below them
    std::vector<std::string> files;
    bool io_error = false;
    for (const auto& p : o.scan_paths) {
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<std::string> found;
            for (auto it = fs::recursive_directory_iterator(p, ec); !ec && it != fs::recursive_directory_iterator();
                 it.increment(ec)) {
                if (it->is_regular_file() && it->path().extension() == ".sol") {
                    found.push_back(it->path().string());
                }
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(p);
        }
    }

    solbug::DetectOptions dopts;
    dopts.include_unsigned_to_signed = o.unsigned_to_signed;
    std::vector<solbug::Finding> findings;
    for (const auto& file : files) {
        solbug::SourceModel model;
        try {
            model = solbug::parse_file(file);
        } catch (const std::exception& e) {
            std::cerr << "solbug: " << file << ": " << e.what() << "\n";
            io_error = true;
            continue;
        }
        for (const auto& d : model.diagnostics) {
            std::cerr << "warning: " << file << ": " << d << "\n";
        }
        auto found = solbug::detect_all(model, enabled, dopts);
        findings.insert(findings.end(), found.begin(), found.end());
    }
    solbug::sort_findings(findings);

    if (o.format == "json") {
        std::cout << solbug::findings_to_json(findings, catalog);
    } else {
        for (const auto& f : findings) {
            std::cout << solbug::finding_to_text(f, catalog) << "\n";
        }
    }
    if (io_error) {
        return kUsage;
    }
    if (o.strict && !findings.empty()) {
        return kFlagged;
    }
    if (threshold) {
        for (const auto& f : findings) {
            const solbug::BugKind* k = catalog.find(f.bug_id);
            if (k && k->severity >= *threshold) {
                return kFlagged;
            }
        }
    }
    return kClean;
}

int cmd_bench(const Options& o) {
    const auto& catalog = active_catalog(o);
    auto manifest = solbug::CorpusManifest::load(o.corpus, catalog);
    std::vector<std::string> warnings;
    solbug::ToolReport tool;
    if (o.tool == "self") {
        tool = solbug::run_builtin_tool(manifest);
    } else {
        std::optional<solbug::IdMap> map;
        if (!o.id_map.empty()) {
            map = solbug::load_id_map(o.id_map);
        }
        tool = solbug::ToolReport::load(o.tool, catalog, map ? &*map : nullptr, &warnings);
    }
    auto report = solbug::evaluate(tool, manifest, catalog, o.split_crafted);
    report.warnings.insert(report.warnings.begin(), warnings.begin(), warnings.end());
    std::cout << (o.format == "json" ? report.to_json() : report.to_text());

    auto below = [](const std::optional<double>& v, double gate) { return gate >= 0.0 && (!v || *v < gate); };
    if (below(report.overall.micro_precision, o.min_precision) || below(report.overall.micro_recall, o.min_recall)) {
        std::cerr << "solbug: metrics below the configured gate\n";
        return kFlagged;
    }
    return kClean;
}

json kind_json(const solbug::BugKind& k, const solbug::Catalog& catalog) {
    json effects = json::array();
    for (const auto& e : k.effects) {
        effects.push_back({{"class", solbug::to_string(e.effect)}, {"certainty", solbug::to_string(e.certainty)}});
    }
    const auto* cat = catalog.category(k.category);
    return {
        {"id", k.id},
        {"display_name", k.display_name},
        {"name_verified", k.name_verified},
        {"category", cat ? cat->name : std::string(1, k.category)},
        {"severity", solbug::to_string(k.severity)},
        {"effects", effects},
        {"affected_versions", k.affected_versions.canonical()},
        {"has_detector", k.has_detector},
        {"criteria_text", k.criteria_text},
    };
}

int cmd_catalog(const Options& o) {
    const auto& catalog = active_catalog(o);
    std::vector<const solbug::BugKind*> rows;
    if (!o.kind.empty()) {
        const auto* k = catalog.find(o.kind);
        if (!k) {
            std::cerr << "solbug: unknown bug id '" << o.kind << "'\n";
            return kUsage;
        }
        rows.push_back(k);
    } else if (!o.category.empty()) {
        if (o.category.size() != 1 || !catalog.category(o.category[0])) {
            std::cerr << "solbug: unknown category '" << o.category << "' (expected A to I)\n";
            return kUsage;
        }
        rows = catalog.in_category(o.category[0]);
    } else {
        for (const auto& k : catalog.kinds()) {
            rows.push_back(&k);
        }
    }

    if (o.format == "json") {
        json doc = json::array();
        for (const auto* k : rows) {
            doc.push_back(kind_json(*k, catalog));
        }
        std::cout << doc.dump(2) << "\n";
        return kClean;
    }
    if (!o.kind.empty()) {
        const auto& k = *rows.front();
        const auto* cat = catalog.category(k.category);
        std::cout << "id:                " << k.id << "\n"
                  << "name:              " << k.display_name << (k.name_verified ? "" : " (best-effort expansion)")
                  << "\n"
                  << "category:          " << k.category << " " << (cat ? cat->name : "") << "\n"
                  << "severity:          " << solbug::to_string(k.severity) << "\n"
                  << "effects:          ";
        for (const auto& e : k.effects) {
            std::cout << " " << solbug::to_string(e.effect) << "/" << solbug::to_string(e.certainty);
        }
        std::cout << "\n"
                  << "affected versions: " << k.affected_versions.canonical() << "\n"
                  << "detector:          " << (k.has_detector ? "available" : "none") << "\n"
                  << "criteria:          " << k.criteria_text << "\n";
        return kClean;
    }
    std::size_t wid = 2;
    std::size_t wname = 4;
    for (const auto* k : rows) {
        wid = std::max(wid, k->id.size());
        wname = std::max(wname, k->display_name.size());
    }
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    auto effects_of = [](const solbug::BugKind& k) {
        std::string out;
        for (const auto& e : k.effects) {
            out += (out.empty() ? "" : ",") + std::string(solbug::to_string(e.effect)) + "/" +
                   std::string(solbug::to_string(e.certainty));
        }
        return out;
    };
    std::size_t weff = 7;
    for (const auto* k : rows) {
        weff = std::max(weff, effects_of(*k).size());
    }
    std::cout << pad("id", wid) << "  " << pad("name", wname) << "  " << pad("category", 11) << "  "
              << pad("severity", 8) << "  " << pad("effects", weff) << "  " << pad("versions", 9) << "  detector\n";
    for (const auto* k : rows) {
        const auto* cat = catalog.category(k->category);
        std::cout << pad(k->id, wid) << "  " << pad(k->display_name, wname) << "  "
                  << pad(cat ? cat->name : "", 11) << "  " << pad(std::string(solbug::to_string(k->severity)), 8)
                  << "  " << pad(effects_of(*k), weff) << "  " << pad(k->affected_versions.canonical(), 9) << "  "
                  << (k->has_detector ? "yes" : "no") << "\n";
    }
    return kClean;
}

int cmd_merge(const Options& o) {
    std::ifstream in(o.records, std::ios::binary);
    if (!in) {
        std::cerr << "solbug: cannot read records file '" << o.records << "'\n";
        return kUsage;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    auto merged = solbug::merge_records(solbug::records_from_json_text(buf.str(), o.records));
    if (o.format == "json") {
        std::cout << solbug::records_to_json(merged);
        return kClean;
    }
    for (const auto& r : merged) {
        std::cout << r.name << (r.renamed ? " [merged]" : "") << "\n  behavior: " << r.behavior
                  << "\n  consequences:";
        for (const auto& c : r.consequences) {
            std::cout << " [" << c << "]";
        }
        std::cout << "\n  aliases: ";
        for (auto it = r.aliases.begin(); it != r.aliases.end(); ++it) {
            std::cout << (it == r.aliases.begin() ? "" : ", ") << *it;
        }
        std::cout << "\n  sources: " << r.source << "\n";
    }
    return kClean;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_watch(const Options& o) {
    namespace col = solbug::collector;
    col::WatchConfig config = o.config.empty() ? col::WatchConfig{} : col::WatchConfig::load(o.config);
    if (o.format == "json") {
        config.stdout_format = "json";
    }
    const auto days = std::chrono::duration_cast<std::chrono::hours>(config.interval).count() / 24;
    std::cerr << "watch: interval ";
    if (config.interval.count() % 86400 == 0) {
        std::cerr << days << " days";
    } else {
        std::cerr << config.interval.count() << " seconds";
    }
    std::cerr << ", " << config.keywords.size() << " keywords, state " << config.state_path << "\n";

    std::unique_ptr<col::HttpTransport> search;
    std::unique_ptr<col::HttpTransport> webhook;
    if (!o.replay.empty()) {
        search = col::RecordedTransport::load(o.replay);
        webhook = col::RecordedTransport::load(o.replay);
    } else {
        search = col::make_http_transport(config.endpoint);
        if (config.notify != "stdout") {
            webhook = col::make_http_transport(config.notify);
        }
    }
    col::Runtime rt = col::system_runtime();
    rt.log = [](const std::string& m) { std::cerr << "watch: " << m << "\n"; };

    auto cycle = [&]() {
        auto r = col::run_cycle(config, *search, webhook.get(), rt, std::cout);
        std::cerr << "watch: " << r.projects << " projects; " << r.detail
                  << (r.delivered ? "" : "; state not advanced") << "\n";
        return r.delivered;
    };
    if (o.once) {
        return cycle() ? kClean : kFlagged;
    }
    std::signal(SIGINT, [](int) { g_stop = 1; });
    std::signal(SIGTERM, [](int) { g_stop = 1; });
    while (!g_stop) {
        try {
            cycle();
        } catch (const col::AuthError&) {
            throw;
        } catch (const std::exception& e) {
            print_error(e);
        }
        // sleep in short slices so a signal ends the loop promptly
        auto deadline = std::chrono::steady_clock::now() + config.interval;
        while (!g_stop && std::chrono::steady_clock::now() < deadline) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200));
        }
    }
    return kClean;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Static checks, catalog and benchmark tooling for Solidity contract bugs", "solbug"};
    app.require_subcommand(1);
    app.add_option("--catalog", o.catalog_path, "Catalog JSON to use instead of the built-in one")
        ->check(CLI::ExistingFile);
    const auto formats = CLI::IsMember({"text", "json"});

    auto* scan = app.add_subcommand("scan", "Run detectors over .sol files or directories");
    scan->add_option("paths", o.scan_paths, "Files or directories")->required();
    scan->add_option("--rules", o.rules, "Comma-separated bug ids, or 'all'");
    scan->add_option("--format", o.format)->check(formats);
    scan->add_flag("--strict", o.strict, "Exit 1 when any finding is reported");
    scan->add_option("--fail-on", o.fail_on, "Exit 1 on findings at or above this severity");
    scan->add_flag("--unsigned-to-signed", o.unsigned_to_signed, "Also flag uint-to-int conversions (A-a-IS)");

    auto* bench = app.add_subcommand("bench", "Score a tool against a labeled corpus");
    bench->add_option("--corpus", o.corpus, "Corpus manifest JSON")->required();
    bench->add_option("--tool", o.tool, "'self' or a tool report JSON");
    bench->add_option("--id-map", o.id_map, "JSON object mapping foreign rule names to catalog ids");
    bench->add_flag("--split-crafted", o.split_crafted, "Also report crafted and non-crafted entries separately");
    bench->add_option("--format", o.format)->check(formats);
    bench->add_option("--min-precision", o.min_precision, "Exit 1 if micro precision is below this")
        ->check(CLI::Range(0.0, 1.0));
    bench->add_option("--min-recall", o.min_recall, "Exit 1 if micro recall is below this")
        ->check(CLI::Range(0.0, 1.0));

    auto* cat = app.add_subcommand("catalog", "Show the bug catalog");
    cat->add_flag("--list", o.list, "List every kind (default)");
    cat->add_option("--category", o.category, "Category letter A to I");
    cat->add_option("--kind", o.kind, "One bug id");
    cat->add_option("--format", o.format)->check(formats);

    auto* merge = app.add_subcommand("merge", "Merge duplicate bug records");
    merge->add_option("records", o.records, "Records JSON")->required();
    merge->add_option("--format", o.format)->check(formats);

    auto* watch = app.add_subcommand("watch", "Poll the code-host search API and report new or updated projects");
    watch->add_option("--config", o.config, "Watch config JSON");
    watch->add_flag("--once", o.once, "Run one cycle and exit");
    watch->add_option("--replay", o.replay, "Serve HTTP from a recording instead of the network");
    watch->add_option("--format", o.format)->check(formats);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kClean : kUsage;
    }

    try {
        if (*scan) {
            return cmd_scan(o);
        }
        if (*bench) {
            return cmd_bench(o);
        }
        if (*cat) {
            return cmd_catalog(o);
        }
        if (*merge) {
            return cmd_merge(o);
        }
        if (*watch) {
            return cmd_watch(o);
        }
    } catch (const solbug::collector::NetworkError& e) {
        print_error(e);
        return kFlagged;
    } catch (const std::exception& e) {
        print_error(e);
        return kUsage;
    }
    return kUsage;
}
