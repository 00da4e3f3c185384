#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "solbug/source_model.hpp"

namespace solbug {

struct Finding {
    std::string bug_id;
    std::string file;
    std::string contract;  // empty at file scope
    std::string function;  // "<top>" outside any function
    Span span;
    std::string message;
    std::vector<Span> evidence;

    bool operator==(const Finding&) const = default;
};

/// Emission order: (file, span, bug_id), then message so the order is
/// total.
bool finding_less(const Finding& a, const Finding& b);
void sort_findings(std::vector<Finding>& findings);

inline constexpr std::string_view kTopLevel = "<top>";

struct DetectOptions {
    /// Also flag unsigned-to-signed conversions under A-a-IS.
    bool include_unsigned_to_signed = false;
};

using DetectorRule = std::vector<Finding> (*)(const SourceModel&, const DetectOptions&);

struct DetectorSpec {
    std::string bug_id;
    PragmaConstraint affected_versions;
    DetectorRule rule = nullptr;
};

/// One spec per detectable catalog kind, ordered by bug id.
const std::vector<DetectorSpec>& detector_specs();
const DetectorSpec* find_detector(std::string_view bug_id);

/// Runs the enabled detectors whose affected versions intersect the file's
/// pragma. Throws solbug::Error if an id has no detector.
std::vector<Finding> detect_all(const SourceModel& model, const std::set<std::string>& enabled,
                                const DetectOptions& options = {});

/// All detectors.
std::vector<Finding> detect_all(const SourceModel& model, const DetectOptions& options = {});

// Individual rules. These ignore version gating.
std::vector<Finding> detect_integer_sign(const SourceModel& model, const DetectOptions& options = {});
std::vector<Finding> detect_wrong_operator(const SourceModel& model, const DetectOptions& options = {});
std::vector<Finding> detect_uninitialized_storage(const SourceModel& model, const DetectOptions& options = {});
std::vector<Finding> detect_reentrancy(const SourceModel& model, const DetectOptions& options = {});
std::vector<Finding> detect_short_address(const SourceModel& model, const DetectOptions& options = {});
std::vector<Finding> detect_wrong_signature_params(const SourceModel& model, const DetectOptions& options = {});
std::vector<Finding> detect_tod_approve(const SourceModel& model, const DetectOptions& options = {});

}  // namespace solbug
