#pragma once

namespace madlasso {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace madlasso
