#pragma once

namespace enda {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace enda
