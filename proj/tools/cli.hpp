#ifndef HPE_CLI_HPP
#define HPE_CLI_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hpe::cli {

/// Exit codes: 0 success, 1 usage, 2 input validation, 3 numerical failure.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

/// 64-bit FNV-1a, printed as 16 hex digits in manifests.
std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t h);

}  // namespace hpe::cli

#endif
