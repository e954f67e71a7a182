#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "copulacp/report_json.hpp"

namespace copulacp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Bad flags, bad configuration or unusable inputs; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every setting with its default value.
Json default_config();

// Objects merge key by key; anything else in `overlay` replaces `base`.
Json merge_config(Json base, const Json& overlay);

// Parses argv, runs one command and returns the process exit code.
// Diagnostics go to stderr.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace copulacp::cli
