#pragma once

namespace stablelad {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace stablelad
