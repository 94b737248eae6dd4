#pragma once

namespace gmpl {

inline constexpr const char* kVersion = "0.3.1";

}  // namespace gmpl
