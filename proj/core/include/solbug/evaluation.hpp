#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "solbug/corpus.hpp"
#include "solbug/detectors.hpp"

namespace solbug {

class Catalog;

/// A finding reduced to matching granularity.
struct ToolFinding {
    std::string file;
    std::string bug_id;

    auto operator<=>(const ToolFinding&) const = default;
};

/// Foreign rule name -> catalog id.
using IdMap = std::map<std::string, std::string>;

IdMap load_id_map(const std::filesystem::path& path);
IdMap id_map_from_json_text(std::string_view text, const std::string& origin = "<id map>");

struct ToolReport {
    std::string tool_name;
    std::set<std::string> claims;
    std::vector<ToolFinding> findings;

    /// Parses `{tool_name, claims, findings: [{file, bug_id}]}`. Ids are
    /// translated through `id_map` first. Finding ids outside the catalog
    /// are an error; claims outside it are dropped with a warning.
    static ToolReport from_json_text(std::string_view text, const Catalog& catalog, const IdMap* id_map = nullptr,
                                     std::vector<std::string>* warnings = nullptr,
                                     const std::string& origin = "<report>");
    static ToolReport load(const std::filesystem::path& path, const Catalog& catalog, const IdMap* id_map = nullptr,
                           std::vector<std::string>* warnings = nullptr);
};

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

/// tp / (tp + fp); nullopt when the denominator is zero.
std::optional<double> precision(const ConfusionCounts& c);
/// tp / (tp + fn); nullopt when the denominator is zero.
std::optional<double> recall(const ConfusionCounts& c);

/// |claims ∩ catalog| / catalog size. Ids outside the catalog are ignored
/// and reported through `warnings`.
double coverage(const std::set<std::string>& claims, const Catalog& catalog,
                std::vector<std::string>* warnings = nullptr);

struct MatchResult {
    ConfusionCounts total;
    std::map<std::string, ConfusionCounts> per_kind;
    std::vector<std::string> warnings;
};

/// Confusion counts at (file, bug_id) granularity. Finding files must equal
/// an entry path; findings on other files are excluded with a warning.
/// Duplicate pairs count once.
MatchResult match(const std::vector<ToolFinding>& findings, const std::vector<CorpusEntry>& entries);

struct MetricsView {
    std::string name;
    std::size_t entries = 0;
    ConfusionCounts counts;
    std::map<std::string, ConfusionCounts> per_kind;
    std::optional<double> micro_precision;
    std::optional<double> micro_recall;
    /// Means over kinds whose metric is defined.
    std::optional<double> macro_precision;
    std::optional<double> macro_recall;
};

struct MetricsReport {
    std::string tool_name;
    std::set<std::string> claims;  // catalog ids only
    double coverage = 0.0;
    MetricsView overall;
    /// "non-crafted" and "crafted" views when requested.
    std::vector<MetricsView> split;
    std::vector<std::string> warnings;

    std::string to_json() const;
    std::string to_text() const;
};

/// Scores `tool` on the manifest entries that concern a claimed kind.
/// Labels and findings of unclaimed kinds do not count.
MetricsReport evaluate(const ToolReport& tool, const CorpusManifest& manifest, const Catalog& catalog,
                       bool split_crafted = false);

/// Maps a finding path (absolute, relative to the working directory, or
/// relative to the manifest) to the manifest entry path it names.
std::optional<std::string> normalize_finding_path(const CorpusManifest& manifest, std::string_view file);

/// Runs the built-in detectors over every manifest entry. Claims are the
/// detectable catalog kinds.
ToolReport run_builtin_tool(const CorpusManifest& manifest, const DetectOptions& options = {});

}  // namespace solbug
