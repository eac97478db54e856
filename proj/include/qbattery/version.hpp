#pragma once

namespace qbattery {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qbattery
