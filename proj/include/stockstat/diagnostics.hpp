#pragma once

#include <functional>
#include <string_view>

namespace stockstat {

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the sink for non-fatal numerical warnings (default: stderr).
/// Returns the previous handler.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace stockstat
