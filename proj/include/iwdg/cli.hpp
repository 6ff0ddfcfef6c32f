#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iwdg::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kCapExceeded = 2, kAcceptanceFailure = 3 };

// Runs one subcommand; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// The published configuration schema (docs/config.schema.json).
std::string_view config_schema();

// First violation of the schema as "<json pointer>: <message>", if any.
std::optional<std::string> schema_violation(std::string_view config_text);

std::string version();

}  // namespace iwdg::cli
