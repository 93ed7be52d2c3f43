#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace taxoeval::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitBackend = 2;

inline constexpr const char* kBackendUrlEnv = "TAXOEVAL_BACKEND_URL";

// Entry point behind the `taxoeval` executable. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taxoeval::cli
