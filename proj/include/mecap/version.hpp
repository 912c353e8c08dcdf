#pragma once

namespace mecap {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mecap
