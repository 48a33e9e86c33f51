#pragma once

namespace blm {

inline constexpr const char* kToolName = "blm";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kDatasetFormatVersion = 1;

}  // namespace blm
