#pragma once

namespace liesde::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Entry point for the liesde tool. Returns the process exit code:
/// 0 success, 2 configuration error, 3 numerical failure.
int run(int argc, const char* const* argv);

}  // namespace liesde::cli
