#pragma once

namespace modsel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace modsel
