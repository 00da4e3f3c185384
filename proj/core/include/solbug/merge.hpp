#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace solbug {

/// One collected bug description: what causes it (behavior) and what it
/// leads to (consequences).
struct BugRecord {
    std::string source;
    std::string name;
    std::string behavior;
    std::set<std::string> consequences;
    /// Every name folded into this record, including its own.
    std::set<std::string> aliases;
    /// Set when records with differing consequences were combined.
    bool renamed = false;

    bool operator==(const BugRecord&) const = default;
};

/// Lower-case with whitespace runs collapsed and trimmed.
std::string normalize_key(std::string_view text);

/// Merges duplicate records until no rule applies:
///  - different behavior keys: both records are kept;
///  - same behavior, different consequences: one record carrying the union
///    of consequences, marked `renamed`;
///  - same behavior and consequences: one record keeping the smaller name.
/// Keys are compared after normalize_key(). The result has one record per
/// behavior key, ordered by that key.
std::vector<BugRecord> merge_records(std::vector<BugRecord> records);

}  // namespace solbug
