#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fishline/camera_model.h"
#include "fishline/lines.h"

namespace fishline {

struct SolverConfig {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;
  double step_tolerance = 1e-12;
  double initial_damping = 1e-3;
  // Components optimized; the rest stay at their initial values. Straight
  // lines are preserved by any similarity of the rectified plane, so k1 and
  // the pixel scales are frozen by default.
  std::array<bool, kNumParams> free{false, true, true, true, true,
                                    false, false, true, true};
  // Angle range over which every iterate must stay monotone.
  double theta_max = kDefaultThetaMax;

  void Validate() const;
  int FreeCount() const;
};

struct StraightnessResiduals {
  // One signed orthogonal distance (rectified pixels) per mapped vertex,
  // chains in input order.
  Eigen::VectorXd values;
  // d(values)/d(params) over all nine components; filled on request.
  Eigen::MatrixXd jacobian;
  // Vertices that could not be undistorted and were left out.
  size_t dropped = 0;
  // Chains contributing >= 3 vertices.
  size_t informative_chains = 0;
};

// Undistorts each chain, fits a total-least-squares line per chain and
// returns every vertex's signed distance to its chain's line. Two-vertex
// chains contribute exact zeros.
StraightnessResiduals straightness_residuals(
    const LineSet& lines, const DistortionParams& k, const PinholeSpec& pin,
    double theta_max = kDefaultThetaMax, bool with_jacobian = false);

enum class RegionStatus { kOk, kDegenerate, kDiverged };

struct RegionEstimate {
  std::string name;
  RegionStatus status = RegionStatus::kDegenerate;
  size_t chains = 0;
  DistortionParams params;
  double rms_residual = 0.0;
  bool converged = false;
};

struct CalibrationResult {
  DistortionParams params;
  double rms_residual = 0.0;
  int iterations = 0;
  // Set only when gradient_norm reached the gradient tolerance; a stop on
  // the step tolerance, a stall or the iteration cap leaves it false.
  bool converged = false;
  // Infinity norm of J^T r over the free components at params.
  double gradient_norm = 0.0;
  size_t dropped_vertices = 0;
  std::vector<double> residuals;
  std::optional<std::vector<RegionEstimate>> per_region;
};

// Levenberg-Marquardt on the straightness residuals over the free
// components. Throws DegenerateInput with fewer than two chains of >= 3
// usable vertices, InvalidModel for a non-monotone init and DivergedModel
// when no step can keep the iterate monotone.
CalibrationResult estimate_params(const LineSet& lines, const PinholeSpec& pin,
                                  const DistortionParams& init,
                                  const SolverConfig& config = {});

// Names of the five regions in the order they are reported.
inline constexpr std::array<const char*, 5> kRegionNames{
    "center", "upper_left", "lower_left", "upper_right", "lower_right"};

// Region membership of a chain by its vertex centroid. The center region
// spans the middle 60% of the lattice in each direction; the other four are
// its quadrants. Regions overlap.
std::array<bool, 5> ChainRegions(const Polyline& line, const PinholeSpec& pin);

// Global estimate plus one estimate per region; k1..k5 are averaged over the
// global and the non-degenerate regional estimates, the remaining
// components come from the global estimate.
CalibrationResult estimate_multiscale(const LineSet& lines,
                                      const PinholeSpec& pin,
                                      const DistortionParams& init,
                                      const SolverConfig& config = {});

DistortionParams FuseEstimates(const DistortionParams& global,
                               const std::vector<DistortionParams>& regional);

}  // namespace fishline
