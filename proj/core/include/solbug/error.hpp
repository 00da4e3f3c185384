#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace solbug {

/// Raised for unusable inputs (unreadable files, schema violations). All
/// problems found in one pass are carried in `details`.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, std::vector<std::string> details = {})
        : std::runtime_error(what), details_(std::move(details)) {}

    const std::vector<std::string>& details() const noexcept { return details_; }

private:
    std::vector<std::string> details_;
};

}  // namespace solbug
