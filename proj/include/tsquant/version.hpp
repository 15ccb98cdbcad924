#pragma once

namespace tsquant {

inline constexpr const char* version = "0.1.0";

/// Version of the JSON/CSV file layouts written by the sweep and CLI.
inline constexpr int schema_version = 1;

}  // namespace tsquant
