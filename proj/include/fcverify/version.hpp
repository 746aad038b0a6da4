#pragma once

namespace fcv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fcv
