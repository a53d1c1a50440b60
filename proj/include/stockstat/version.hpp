#pragma once

namespace stockstat {
inline constexpr const char* kVersion = "0.1.0";
}
