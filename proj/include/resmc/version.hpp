#pragma once

namespace resmc {

inline constexpr const char* kVersion = "resmc 0.1.0";

}  // namespace resmc
