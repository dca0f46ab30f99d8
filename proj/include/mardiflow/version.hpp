#pragma once

namespace mardiflow {

inline constexpr const char* kToolName = "mardiflow-like";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace mardiflow
