#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace bec::cli {

inline constexpr int kSchemaVersion = 1;

/// Runs the command line; returns the process exit code
/// (0 ok, 2 config, 3 certification, 4 audit failure, 5 resource).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace bec::cli
