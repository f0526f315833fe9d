#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace glassyqpe::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,
    kVerificationFailed = 1,
    kBadArguments = 2,
    kNoBracket = 3,
};

inline constexpr const char *kVersion = "0.1.0";
/// Environment variable holding the default master seed.
inline constexpr const char *kSeedEnv = "GLASSYQPE_SEED";
inline constexpr unsigned long long kFallbackSeed = 20240601ULL;

/// Entry point shared by the binary and the tests. `args` excludes argv[0].
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

}  // namespace glassyqpe::cli
