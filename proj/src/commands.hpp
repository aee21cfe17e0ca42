#pragma once

// Subcommand implementations behind the C interface. Each takes a JSON request,
// writes its artifacts under request["out"] and returns a JSON summary.

#include "swatnn/config.hpp"

#include <functional>
#include <string>

namespace swatnn::cmd {

using Logger = std::function<void(const std::string&)>;

bool is_command(const std::string& name);
Json run(const std::string& name, const Json& request, const Logger& log);

}  // namespace swatnn::cmd
