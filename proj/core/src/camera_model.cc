#include "fishline/camera_model.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fishline/error.h"

namespace fishline {
namespace {

constexpr double kCenterEpsilon = 1e-12;
constexpr double kRootTolerance = 1e-12;
constexpr int kMaxRootIterations = 100;
constexpr int kDerivativeGridSize = 4096;

double EvalPoly(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
    acc = acc * x + *it;
  }
  return acc;
}

std::vector<double> Trimmed(std::vector<double> coeffs) {
  while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
  return coeffs;
}

std::vector<double> Derivative(const std::vector<double>& coeffs) {
  std::vector<double> d;
  for (size_t i = 1; i < coeffs.size(); ++i) {
    d.push_back(static_cast<double>(i) * coeffs[i]);
  }
  if (d.empty()) d.push_back(0.0);
  return d;
}

// Root of a polynomial that changes sign on [lo, hi] and is monotone there.
double BisectRoot(std::span<const double> coeffs, double lo, double hi) {
  double flo = EvalPoly(coeffs, lo);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fmid = EvalPoly(coeffs, mid);
    if (fmid == 0.0) return mid;
    if ((fmid < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// All real roots in [a, b], isolated recursively between the critical points
// of the polynomial so that each piece is monotone.
std::vector<double> RealRootsIn(std::vector<double> coeffs, double a,
                                double b) {
  coeffs = Trimmed(std::move(coeffs));
  const size_t degree = coeffs.size() - 1;
  std::vector<double> roots;
  if (degree == 0) return roots;
  if (degree == 1) {
    const double x = -coeffs[0] / coeffs[1];
    if (x >= a && x <= b) roots.push_back(x);
    return roots;
  }
  std::vector<double> breaks{a};
  for (double c : RealRootsIn(Derivative(coeffs), a, b)) {
    if (c > breaks.back()) breaks.push_back(c);
  }
  if (b > breaks.back()) breaks.push_back(b);

  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double x0 = breaks[i];
    const double x1 = breaks[i + 1];
    const double p0 = EvalPoly(coeffs, x0);
    const double p1 = EvalPoly(coeffs, x1);
    if (p0 == 0.0) {
      roots.push_back(x0);
    } else if ((p0 < 0.0) != (p1 < 0.0) && p1 != 0.0) {
      roots.push_back(BisectRoot(coeffs, x0, x1));
    }
  }
  if (EvalPoly(coeffs, b) == 0.0) roots.push_back(b);
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  return roots;
}

// dR/dtheta as a polynomial in s = theta^2:
// k1 + 3 k2 s + 5 k3 s^2 + 7 k4 s^3 + 9 k5 s^4.
std::vector<double> DerivativeInSquaredTheta(const DistortionParams& k) {
  std::vector<double> q(kNumRadialTerms);
  for (int i = 0; i < kNumRadialTerms; ++i) {
    q[i] = static_cast<double>(2 * i + 1) * k.k[i];
  }
  return q;
}

// Smallest s in [0, s_max] with q(s) <= 0, if any.
std::optional<double> FirstNonPositive(const std::vector<double>& q,
                                       double s_max) {
  if (EvalPoly(q, 0.0) <= 0.0) return 0.0;
  std::optional<double> first;
  auto consider = [&first](double s) {
    if (!first || s < *first) first = s;
  };
  for (double s : RealRootsIn(q, 0.0, s_max)) consider(s);
  // Touching roots (q >= 0 with a double root) show up as critical points.
  for (double c : RealRootsIn(Derivative(q), 0.0, s_max)) {
    if (EvalPoly(q, c) <= 0.0) consider(c);
  }
  return first;
}

}  // namespace

DistortionParams DistortionParams::Equidistant(double k1, double u0,
                                               double v0) {
  DistortionParams p;
  p.k = {k1, 0.0, 0.0, 0.0, 0.0};
  p.u0 = u0;
  p.v0 = v0;
  return p;
}

DistortionParams DistortionParams::FromVector(const ParamVector& v) {
  DistortionParams p;
  for (int i = 0; i < kNumRadialTerms; ++i) p.k[i] = v[i];
  p.mu = v[kMu];
  p.mv = v[kMv];
  p.u0 = v[kU0];
  p.v0 = v[kV0];
  return p;
}

ParamVector DistortionParams::ToVector() const {
  ParamVector v;
  v << k[0], k[1], k[2], k[3], k[4], mu, mv, u0, v0;
  return v;
}

void PinholeSpec::Validate() const {
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw Error(ErrorCode::kParse, "pinhole field 'f' must be positive");
  }
  if (width < 1) {
    throw Error(ErrorCode::kParse, "pinhole field 'width' must be >= 1");
  }
  if (height < 1) {
    throw Error(ErrorCode::kParse, "pinhole field 'height' must be >= 1");
  }
}

double radial_profile(double theta, const DistortionParams& k) {
  const double t2 = theta * theta;
  double acc = 0.0;
  for (int i = kNumRadialTerms - 1; i >= 0; --i) acc = acc * t2 + k.k[i];
  return acc * theta;
}

double radial_profile_derivative(double theta, const DistortionParams& k) {
  return EvalPoly(DerivativeInSquaredTheta(k), theta * theta);
}

ValidityReport validate_params(const DistortionParams& k, double theta_max) {
  if (!(theta_max > 0.0) || !(theta_max < std::numbers::pi / 2)) {
    throw Error(ErrorCode::kInvalidModel,
                "theta_max must lie in (0, pi/2), got " +
                    std::to_string(theta_max));
  }
  const std::vector<double> q = DerivativeInSquaredTheta(k);

  std::optional<double> first_theta;
  if (auto s = FirstNonPositive(q, theta_max * theta_max)) {
    first_theta = std::sqrt(*s);
  }
  // The dense grid only ever tightens the exact answer.
  for (int i = 0; i < kDerivativeGridSize; ++i) {
    const double theta = theta_max * i / (kDerivativeGridSize - 1);
    if (first_theta && theta >= *first_theta) break;
    if (EvalPoly(q, theta * theta) <= 0.0) {
      first_theta = theta;
      break;
    }
  }

  ValidityReport report;
  report.monotone = !first_theta.has_value();
  report.theta_max = report.monotone ? theta_max : *first_theta;
  report.max_radius = radial_profile(report.theta_max, k);
  return report;
}

RayDirection ray_from_rectified(const Vec2& p_r, const PinholeSpec& pin) {
  const double dx = p_r.x() - pin.cx;
  const double dy = p_r.y() - pin.cy;
  return {std::atan2(std::hypot(dx, dy), pin.f), std::atan2(dy, dx)};
}

double required_theta_max(const PinholeSpec& pin) {
  const double xs[2] = {0.0, static_cast<double>(pin.width - 1)};
  const double ys[2] = {0.0, static_cast<double>(pin.height - 1)};
  double rho = 0.0;
  for (double x : xs) {
    for (double y : ys) {
      rho = std::max(rho, std::hypot(x - pin.cx, y - pin.cy));
    }
  }
  return std::atan2(rho, pin.f);
}

FisheyeModel::FisheyeModel(const DistortionParams& params,
                           const PinholeSpec& pin, double theta_max)
    : params_(params),
      pin_(pin),
      requested_theta_max_(theta_max),
      validity_(validate_params(params, theta_max)) {
  if (!(params.mu > 0.0) || !(params.mv > 0.0)) {
    throw Error(ErrorCode::kInvalidModel, "m_u and m_v must be positive");
  }
}

std::optional<Vec2> FisheyeModel::TryDistort(const Vec2& p_r) const {
  const double dx = p_r.x() - pin_.cx;
  const double dy = p_r.y() - pin_.cy;
  const double rho = std::hypot(dx, dy);
  if (!std::isfinite(rho)) return std::nullopt;
  if (rho < kCenterEpsilon) return Vec2(params_.u0, params_.v0);
  const double theta = std::atan2(rho, pin_.f);
  if (theta > validity_.theta_max) return std::nullopt;
  const double radius = radial_profile(theta, params_);
  return Vec2(params_.mu * radius * (dx / rho) + params_.u0,
              params_.mv * radius * (dy / rho) + params_.v0);
}

Vec2 FisheyeModel::Distort(const Vec2& p_r) const {
  if (auto p_f = TryDistort(p_r)) return *p_f;
  throw Error(ErrorCode::kOutOfValidRange,
              "rectified point beyond theta_max=" +
                  std::to_string(validity_.theta_max));
}

double FisheyeModel::FisheyeRadius(const Vec2& p_f) const {
  return std::hypot((p_f.x() - params_.u0) / params_.mu,
                    (p_f.y() - params_.v0) / params_.mv);
}

double FisheyeModel::InverseRadial(double radius) const {
  double lo = 0.0;
  double hi = validity_.theta_max;
  if (radius <= 0.0) return 0.0;
  if (radius >= validity_.max_radius) return hi;

  const double k1 = params_.k[0];
  double theta = std::clamp(radius / k1, lo, hi);
  for (int iter = 0; iter < kMaxRootIterations; ++iter) {
    const double residual = radial_profile(theta, params_) - radius;
    if (residual == 0.0) return theta;
    if (residual > 0.0) {
      hi = theta;
    } else {
      lo = theta;
    }
    const double slope = radial_profile_derivative(theta, params_);
    double next = theta - residual / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - theta) <= kRootTolerance || hi - lo <= kRootTolerance) {
      // A bisection midpoint is only bracket-accurate; one Newton step fixes it.
      const double polished =
          next - (radial_profile(next, params_) - radius) /
                     radial_profile_derivative(next, params_);
      return (polished >= lo && polished <= hi) ? polished : next;
    }
    theta = next;
  }
  return theta;
}

std::optional<Vec2> FisheyeModel::TryUndistort(const Vec2& p_f) const {
  if (!validity_.monotone) return std::nullopt;
  const double dx = (p_f.x() - params_.u0) / params_.mu;
  const double dy = (p_f.y() - params_.v0) / params_.mv;
  const double radius = std::hypot(dx, dy);
  if (!std::isfinite(radius)) return std::nullopt;
  if (radius < kCenterEpsilon) return Vec2(pin_.cx, pin_.cy);
  // Points produced by Distort at exactly theta_max may round past the edge.
  if (radius > validity_.max_radius * (1.0 + 1e-12)) return std::nullopt;
  const double theta = InverseRadial(radius);
  const double scale = pin_.f * std::tan(theta) / radius;
  return Vec2(pin_.cx + scale * dx, pin_.cy + scale * dy);
}

Vec2 FisheyeModel::Undistort(const Vec2& p_f) const {
  if (!validity_.monotone) {
    throw Error(ErrorCode::kNonMonotonic,
                "radial profile is not monotone on [0, " +
                    std::to_string(requested_theta_max_) + "]");
  }
  if (auto p_r = TryUndistort(p_f)) return *p_r;
  throw Error(ErrorCode::kOutOfValidRange,
              "fisheye radius exceeds max_radius=" +
                  std::to_string(validity_.max_radius));
}

ParamJacobian FisheyeModel::DistortionJacobian(const Vec2& p_r) const {
  ParamJacobian jac = ParamJacobian::Zero();
  jac(0, kU0) = 1.0;
  jac(1, kV0) = 1.0;
  const double dx = p_r.x() - pin_.cx;
  const double dy = p_r.y() - pin_.cy;
  const double rho = std::hypot(dx, dy);
  if (rho < kCenterEpsilon) return jac;
  const double theta = std::atan2(rho, pin_.f);
  if (theta > validity_.theta_max) {
    throw Error(ErrorCode::kOutOfValidRange,
                "rectified point beyond theta_max=" +
                    std::to_string(validity_.theta_max));
  }
  const double cos_phi = dx / rho;
  const double sin_phi = dy / rho;
  const double t2 = theta * theta;
  double power = theta;
  for (int i = 0; i < kNumRadialTerms; ++i) {
    jac(0, kK1 + i) = params_.mu * power * cos_phi;
    jac(1, kK1 + i) = params_.mv * power * sin_phi;
    power *= t2;
  }
  const double radius = radial_profile(theta, params_);
  jac(0, kMu) = radius * cos_phi;
  jac(1, kMv) = radius * sin_phi;
  return jac;
}

ParamJacobian FisheyeModel::UndistortionJacobian(const Vec2& p_f) const {
  if (!validity_.monotone) {
    throw Error(ErrorCode::kNonMonotonic, "radial profile is not monotone");
  }
  const double dx = (p_f.x() - params_.u0) / params_.mu;
  const double dy = (p_f.y() - params_.v0) / params_.mv;
  const double radius = std::hypot(dx, dy);
  if (radius > validity_.max_radius * (1.0 + 1e-12)) {
    throw Error(ErrorCode::kOutOfValidRange,
                "fisheye radius exceeds max_radius=" +
                    std::to_string(validity_.max_radius));
  }
  const double f = pin_.f;
  ParamJacobian jac = ParamJacobian::Zero();

  // p_r - c = g(r) * (dx, dy) with g(r) = f tan(theta(r)) / r.
  double g;
  double g_prime_over_r;
  if (radius < kCenterEpsilon) {
    g = f / params_.k[0];
    g_prime_over_r = 0.0;
  } else {
    const double theta = InverseRadial(radius);
    const double slope = radial_profile_derivative(theta, params_);
    const double tan_theta = std::tan(theta);
    const double sec2 = 1.0 + tan_theta * tan_theta;
    g = f * tan_theta / radius;
    const double g_prime =
        f * sec2 / (slope * radius) - f * tan_theta / (radius * radius);
    g_prime_over_r = g_prime / radius;

    const double t2 = theta * theta;
    double power = theta;
    for (int i = 0; i < kNumRadialTerms; ++i) {
      const double dtheta = -power / slope;
      const double coeff = f * sec2 * dtheta / radius;
      jac(0, kK1 + i) = coeff * dx;
      jac(1, kK1 + i) = coeff * dy;
      power *= t2;
    }
  }

  Eigen::Matrix2d m = g * Eigen::Matrix2d::Identity();
  const Vec2 d(dx, dy);
  m += g_prime_over_r * d * d.transpose();
  jac.col(kU0) = m * Vec2(-1.0 / params_.mu, 0.0);
  jac.col(kV0) = m * Vec2(0.0, -1.0 / params_.mv);
  jac.col(kMu) = m * Vec2(-dx / params_.mu, 0.0);
  jac.col(kMv) = m * Vec2(0.0, -dy / params_.mv);
  return jac;
}

Vec2 distort_point(const Vec2& p_r, const PinholeSpec& pin,
                   const DistortionParams& k, double theta_max) {
  return FisheyeModel(k, pin, theta_max).Distort(p_r);
}

Vec2 undistort_point(const Vec2& p_f, const PinholeSpec& pin,
                     const DistortionParams& k, double theta_max) {
  return FisheyeModel(k, pin, theta_max).Undistort(p_f);
}

ParamJacobian distortion_jacobian(const Vec2& p_r, const PinholeSpec& pin,
                                  const DistortionParams& k,
                                  double theta_max) {
  return FisheyeModel(k, pin, theta_max).DistortionJacobian(p_r);
}

}  // namespace fishline
