#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace fishline::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitModel = 3,
};

// Entry point shared by the executable and the tests. Normal output goes to
// `out`; every failure writes exactly one line to `err`.
int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err);

struct GradcheckReport {
  double max_relative_error = 0.0;
  // Human-readable description of the worst entry.
  std::string worst;
};

// Compares the analytic distortion and undistortion Jacobians with central
// differences (h = 1e-6) on `trials` sampled configurations. inject_fault
// flips the sign of one analytic entry.
GradcheckReport RunGradcheck(std::uint64_t seed, int trials,
                             bool inject_fault = false);

inline constexpr double kGradcheckTolerance = 1e-4;

}  // namespace fishline::cli
