#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "solbug/pragma.hpp"

namespace solbug {

class Catalog;

enum class EntryKind { Buggy, Fixed, Crafted };
enum class Origin { Unchanged, Modified, Handwritten };

std::string_view to_string(EntryKind k);
std::string_view to_string(Origin o);
std::optional<EntryKind> parse_entry_kind(std::string_view s);
std::optional<Origin> parse_origin(std::string_view s);

inline constexpr std::string_view kCorpusSchemaVersion = "corpus.v1";

/// One labeled contract of a corpus manifest.
struct CorpusEntry {
    std::string path;  // relative to the manifest directory
    std::string solidity_versions;
    EntryKind kind = EntryKind::Buggy;
    Origin origin = Origin::Handwritten;
    std::optional<int> strategy;  // 1, 2 or 3 for crafted entries
    std::set<std::string> labels;  // bug kinds present in the file
    std::string notes;
    /// Bug kind a fixed (or fix-style crafted) entry repairs.
    std::optional<std::string> fixes;
    /// Ids the shipped detector suite is expected to report. Defaults to
    /// `labels`; differs for crafted traps that document a miss or a false
    /// positive.
    std::optional<std::set<std::string>> expected_findings;

    std::set<std::string> expected() const { return expected_findings ? *expected_findings : labels; }
    /// True when the entry is relevant to `bug_id`: labeled with it, or a
    /// fix for it.
    bool concerns(std::string_view bug_id) const;

    bool operator==(const CorpusEntry&) const = default;
};

struct CorpusCounts {
    std::map<std::string, std::size_t> by_origin;
    std::map<std::string, std::size_t> by_kind;

    bool operator==(const CorpusCounts&) const = default;
};

struct CorpusFilter {
    std::optional<std::string> bug_id;
    std::optional<EntryKind> kind;
    std::optional<int> strategy;
};

class CorpusManifest {
public:
    /// Reads and validates a manifest file. Throws solbug::Error listing
    /// every problem found.
    static CorpusManifest load(const std::filesystem::path& path);
    static CorpusManifest load(const std::filesystem::path& path, const Catalog& catalog);

    /// Parses manifest JSON. Fixture paths are resolved against `base_dir`
    /// and must exist unless `check_files` is false.
    static CorpusManifest from_json_text(std::string_view text, const std::filesystem::path& base_dir,
                                         const Catalog& catalog, bool check_files = true,
                                         const std::string& origin = "<manifest>");

    const std::vector<CorpusEntry>& entries() const { return entries_; }
    const std::string& schema_version() const { return schema_version_; }
    const std::filesystem::path& base_dir() const { return base_dir_; }
    CorpusCounts counts() const;

    std::filesystem::path resolve(const CorpusEntry& e) const { return base_dir_ / e.path; }
    const CorpusEntry* find(std::string_view path) const;

    /// Canonical JSON: entries in manifest order, keys sorted, label sets
    /// sorted, optional fields omitted when unset.
    std::string to_json() const;

private:
    std::string schema_version_{kCorpusSchemaVersion};
    std::filesystem::path base_dir_;
    std::vector<CorpusEntry> entries_;
};

/// Entries matching every set clause of `filter`, in manifest order.
std::vector<CorpusEntry> select(const CorpusManifest& manifest, const CorpusFilter& filter);

}  // namespace solbug
