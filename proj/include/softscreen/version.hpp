#pragma once

namespace softscreen {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace softscreen
