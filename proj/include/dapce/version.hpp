#pragma once

namespace dapce {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dapce
