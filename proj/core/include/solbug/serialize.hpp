#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "solbug/detectors.hpp"
#include "solbug/merge.hpp"

namespace solbug {

class Catalog;

/// {bug_id, severity, file, contract, function, span: {start, end},
///  message, evidence: [{start, end}]}. Severity comes from `catalog`.
nlohmann::json finding_to_json(const Finding& f, const Catalog& catalog);
std::string findings_to_json(const std::vector<Finding>& findings, const Catalog& catalog);

/// `file:start-end: bug_id severity message`
std::string finding_to_text(const Finding& f, const Catalog& catalog);

/// Reads `[{source, name, behavior, consequences: [...], aliases?, renamed?}]`.
/// Throws solbug::Error naming every malformed record.
std::vector<BugRecord> records_from_json_text(std::string_view text, const std::string& origin = "<records>");
std::string records_to_json(const std::vector<BugRecord>& records);

}  // namespace solbug
