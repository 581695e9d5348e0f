#pragma once

#include <string>

#include "json.hpp"

namespace qcsum::cli {

using Json = nlohmann::ordered_json;

/// Deterministic JSON text: keys in insertion order, doubles as %.17g,
/// non-finite doubles as null.
std::string to_json_text(const Json& value, int indent = 2);

/// %.17g, or an empty string for NaN (used for CSV blanks).
std::string format_number(double value);

}  // namespace qcsum::cli
