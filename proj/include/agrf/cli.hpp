#pragma once

#include <iosfwd>

namespace agrf::cli {

/// Highest derivative order the kernel table is enlarged to when predicting.
inline constexpr int kMaxTableOrder = 16;

/// Entry point of the `agrf` tool. Exit codes: 0 success, 1 usage error,
/// 2 parse error, 3 validation error, 4 numerical failure.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace agrf::cli
