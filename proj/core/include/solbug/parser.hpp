#pragma once

#include <string>

#include "solbug/source_model.hpp"

namespace solbug {

/// Shallow structural parse of one Solidity file (0.4.x to 0.6.x syntax).
/// Never throws on malformed input; problems are recorded in
/// `SourceModel::diagnostics` and unrecognised statements become opaque.
SourceModel parse(std::string source, std::string file_path = "<stdin>");

/// Reads and parses a file. Throws std::runtime_error if it cannot be read.
SourceModel parse_file(const std::string& path);

}  // namespace solbug
