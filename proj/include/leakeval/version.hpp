#pragma once

namespace leakeval {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace leakeval
