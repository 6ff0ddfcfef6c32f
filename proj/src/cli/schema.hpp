#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace iwdg::cli::detail {

// Validates against the subset of JSON Schema used by the published config
// schema: type, enum, properties, required, additionalProperties (boolean),
// items, minItems, maxItems, minimum, maximum, exclusiveMinimum, oneOf and
// local "$ref"s. Violations are "<json pointer>: <message>".
std::vector<std::string> validate_schema(const nlohmann::json& instance, const nlohmann::json& schema);

}  // namespace iwdg::cli::detail
