#pragma once

namespace lineage {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Bump when the cached graph artifact layout changes.
inline constexpr int kCacheFormatVersion = 1;

} // namespace lineage
