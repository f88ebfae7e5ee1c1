#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace easlab::cli {

inline constexpr std::uint64_t kDefaultSeed = 1729;

// Exit codes: 0 success, 1 usage error, 2 runtime failure.
// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace easlab::cli
