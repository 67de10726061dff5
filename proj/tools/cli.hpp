#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gi::cli {

/// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kIoError = 1,          ///< unreadable/unwritable files, malformed input
  kIdentifiability = 2,  ///< environment means do not span the covariate space
  kDegenerate = 3,       ///< singular covariance (training scatter or test sample)
  kEllipsoid = 4,        ///< strict mode: K outside the causal ellipsoid
  kSelection = 5,        ///< source selection infeasible
  kUsage = 64,
};

inline constexpr std::uint64_t kDefaultSeed = 42;
inline constexpr const char* kVersion = "0.1.0";

/// Seed used when --seed is absent: GI_SEED when set to an integer, else 42.
std::uint64_t default_seed();

/// Runs one invocation. `args` excludes the program name. Results go to
/// --output (atomically, with a `<output>.config.json` sidecar) or to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gi::cli
