#pragma once

#include <array>
#include <optional>

#include <Eigen/Core>

namespace fishline {

using Vec2 = Eigen::Vector2d;
using ParamVector = Eigen::Matrix<double, 9, 1>;
using ParamJacobian = Eigen::Matrix<double, 2, 9>;

inline constexpr int kNumParams = 9;
inline constexpr int kNumRadialTerms = 5;

// Position of each component in the flattened parameter vector
// (k1..k5, m_u, m_v, u0, v0).
enum ParamIndex : int {
  kK1 = 0,
  kK2 = 1,
  kK3 = 2,
  kK4 = 3,
  kK5 = 4,
  kMu = 5,
  kMv = 6,
  kU0 = 7,
  kV0 = 8,
};

// Incidence angle range assumed when a caller does not state one.
inline constexpr double kDefaultThetaMax = 1.2;

// Generic radially symmetric fisheye model. The radial profile is the odd
// polynomial R(theta) = k1*theta + k2*theta^3 + ... + k5*theta^9, scaled to
// pixels by (m_u, m_v) and offset by the distortion center (u0, v0).
struct DistortionParams {
  std::array<double, kNumRadialTerms> k{};
  double mu = 1.0;
  double mv = 1.0;
  double u0 = 0.0;
  double v0 = 0.0;

  static DistortionParams Equidistant(double k1, double u0, double v0);
  static DistortionParams FromVector(const ParamVector& v);
  ParamVector ToVector() const;

  bool operator==(const DistortionParams&) const = default;
};

// Target perspective view: R_p(theta) = f * tan(theta) around (cx, cy).
struct PinholeSpec {
  double f = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws Error(kParse) when f <= 0 or the lattice is empty.
  void Validate() const;

  bool operator==(const PinholeSpec&) const = default;
};

struct RayDirection {
  double theta = 0.0;
  double phi = 0.0;
};

struct ValidityReport {
  bool monotone = false;
  // Supremum of the range [0, theta_max] on which dR/dtheta > 0. Equals the
  // requested range when monotone.
  double theta_max = 0.0;
  double max_radius = 0.0;
};

double radial_profile(double theta, const DistortionParams& k);
double radial_profile_derivative(double theta, const DistortionParams& k);

// Checks strict monotonicity of the radial profile on [0, theta_max] by dense
// sampling of the derivative combined with exact root isolation of the
// derivative polynomial. theta_max must lie in (0, pi/2).
ValidityReport validate_params(const DistortionParams& k, double theta_max);

RayDirection ray_from_rectified(const Vec2& p_r, const PinholeSpec& pin);

// Largest incidence angle reached by any pixel of the pinhole lattice.
double required_theta_max(const PinholeSpec& pin);

// A parameter set bound to a target view and a validated angle range. The
// validity report is computed once at construction; every mapping is then a
// pure function of its argument.
class FisheyeModel {
 public:
  FisheyeModel(const DistortionParams& params, const PinholeSpec& pin,
               double theta_max = kDefaultThetaMax);

  const DistortionParams& params() const { return params_; }
  const PinholeSpec& pinhole() const { return pin_; }
  const ValidityReport& validity() const { return validity_; }
  double requested_theta_max() const { return requested_theta_max_; }

  // Rectified pixel -> fisheye pixel. Throws OutOfValidRange when the ray
  // angle exceeds the usable range.
  Vec2 Distort(const Vec2& p_r) const;
  std::optional<Vec2> TryDistort(const Vec2& p_r) const;

  // Fisheye pixel -> rectified pixel. Throws NonMonotonic when the profile
  // failed validation and OutOfValidRange beyond max_radius.
  Vec2 Undistort(const Vec2& p_f) const;
  std::optional<Vec2> TryUndistort(const Vec2& p_f) const;

  // Solves R(theta) = radius on [0, theta_max]. Requires a monotone profile
  // and radius in [0, max_radius].
  double InverseRadial(double radius) const;

  // d(p_f)/d(params) at a rectified pixel.
  ParamJacobian DistortionJacobian(const Vec2& p_r) const;

  // d(p_r)/d(params) at a fisheye pixel, by implicit differentiation of the
  // radial root: d(theta)/d(k_i) = -theta^(2i-1) / R'(theta).
  ParamJacobian UndistortionJacobian(const Vec2& p_f) const;

  // Normalized fisheye radius ||diag(1/m_u, 1/m_v) (p_f - center)||.
  double FisheyeRadius(const Vec2& p_f) const;

 private:
  DistortionParams params_;
  PinholeSpec pin_;
  double requested_theta_max_;
  ValidityReport validity_;
};

// Free-function forms of the model mappings. Each validates k over
// theta_max on every call; prefer FisheyeModel in loops.
Vec2 distort_point(const Vec2& p_r, const PinholeSpec& pin,
                   const DistortionParams& k,
                   double theta_max = kDefaultThetaMax);
Vec2 undistort_point(const Vec2& p_f, const PinholeSpec& pin,
                     const DistortionParams& k,
                     double theta_max = kDefaultThetaMax);
ParamJacobian distortion_jacobian(const Vec2& p_r, const PinholeSpec& pin,
                                  const DistortionParams& k,
                                  double theta_max = kDefaultThetaMax);

}  // namespace fishline
