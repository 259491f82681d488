#pragma once

namespace agrf {

inline constexpr const char *kVersion = "1.0.0";

}  // namespace agrf
