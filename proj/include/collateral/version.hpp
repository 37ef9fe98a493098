#pragma once

namespace collateral {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace collateral
