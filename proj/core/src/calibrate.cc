#include "fishline/calibrate.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>

#include "fishline/error.h"
#include "fishline/warp.h"

namespace fishline {
namespace {

constexpr double kMaxDamping = 1e20;
constexpr int kMaxActiveSetPasses = 3;

struct ChainFit {
  Vec2 mean;
  Vec2 tangent;
  Vec2 normal;
  // lambda_min - lambda_max of the scatter matrix (<= 0).
  double eigen_gap = 0.0;
};

// Total least squares line through points: the normal is the eigenvector of
// the smaller eigenvalue of the 2x2 scatter matrix.
ChainFit FitLine(const std::vector<Vec2>& points) {
  ChainFit fit;
  fit.mean = Vec2::Zero();
  for (const Vec2& q : points) fit.mean += q;
  fit.mean /= static_cast<double>(points.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const Vec2& q : points) {
    const Vec2 e = q - fit.mean;
    sxx += e.x() * e.x();
    sxy += e.x() * e.y();
    syy += e.y() * e.y();
  }
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  fit.tangent = Vec2(std::cos(angle), std::sin(angle));
  fit.normal = Vec2(-fit.tangent.y(), fit.tangent.x());
  fit.eigen_gap = -std::hypot(sxx - syy, 2.0 * sxy);
  return fit;
}

// Residuals of a fixed vertex set. When strict, any vertex the model cannot
// map makes the whole evaluation fail; otherwise such vertices are dropped.
std::optional<StraightnessResiduals> Evaluate(const LineSet& lines,
                                              const FisheyeModel& model,
                                              bool with_jacobian,
                                              bool strict) {
  StraightnessResiduals out;
  std::vector<double> values;
  std::vector<ParamJacobian> rows;
  std::vector<Vec2> mapped;
  std::vector<Vec2> sources;

  for (const Polyline& line : lines.lines) {
    mapped.clear();
    sources.clear();
    for (const Vec2& p_f : line.points) {
      const auto p_r = model.TryUndistort(p_f);
      if (!p_r) {
        if (strict) return std::nullopt;
        ++out.dropped;
        continue;
      }
      mapped.push_back(*p_r);
      sources.push_back(p_f);
    }
    const size_t n = mapped.size();
    if (n < 2) {
      out.dropped += n;
      continue;
    }
    if (n == 2) {
      values.insert(values.end(), 2, 0.0);
      if (with_jacobian) rows.insert(rows.end(), 2, ParamJacobian::Zero());
      continue;
    }
    ++out.informative_chains;
    const ChainFit fit = FitLine(mapped);
    for (const Vec2& q : mapped) values.push_back(fit.normal.dot(q - fit.mean));
    if (!with_jacobian) continue;

    // Differentiate r_j = n . (q_j - m) through the mean and the eigenvector:
    // dn = t (t^T dS n) / (lambda_min - lambda_max).
    using RowVec = Eigen::Matrix<double, 1, kNumParams>;
    std::vector<RowVec> along_normal(n);
    RowVec scatter_term = RowVec::Zero();
    RowVec mean_term = RowVec::Zero();
    for (size_t j = 0; j < n; ++j) {
      const ParamJacobian jq = model.UndistortionJacobian(sources[j]);
      const Vec2 e = mapped[j] - fit.mean;
      along_normal[j] = fit.normal.transpose() * jq;
      const RowVec along_tangent = fit.tangent.transpose() * jq;
      scatter_term += e.dot(fit.normal) * along_tangent +
                      e.dot(fit.tangent) * along_normal[j];
      mean_term += along_normal[j];
    }
    mean_term /= static_cast<double>(n);
    const bool separable = fit.eigen_gap < -1e-300;
    for (size_t j = 0; j < n; ++j) {
      RowVec row = along_normal[j] - mean_term;
      if (separable) {
        row += (fit.tangent.dot(mapped[j] - fit.mean) / fit.eigen_gap) *
               scatter_term;
      }
      ParamJacobian packed = ParamJacobian::Zero();
      packed.row(0) = row;
      rows.push_back(packed);
    }
  }

  out.values = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                 static_cast<Eigen::Index>(values.size()));
  if (with_jacobian) {
    out.jacobian.resize(static_cast<Eigen::Index>(rows.size()), kNumParams);
    for (size_t i = 0; i < rows.size(); ++i) {
      out.jacobian.row(static_cast<Eigen::Index>(i)) = rows[i].row(0);
    }
  }
  return out;
}

// Vertices the model can map, chains with fewer than two such vertices
// removed.
LineSet ActiveVertices(const LineSet& lines, const FisheyeModel& model) {
  LineSet active;
  for (const Polyline& line : lines.lines) {
    Polyline kept;
    for (const Vec2& p : line.points) {
      if (model.TryUndistort(p)) kept.points.push_back(p);
    }
    if (kept.size() >= 2) active.lines.push_back(std::move(kept));
  }
  return active;
}

size_t InformativeChains(const LineSet& lines) {
  return static_cast<size_t>(std::count_if(
      lines.lines.begin(), lines.lines.end(),
      [](const Polyline& l) { return l.size() >= 3; }));
}

std::vector<int> FreeIndices(const SolverConfig& config) {
  std::vector<int> idx;
  for (int i = 0; i < kNumParams; ++i) {
    if (config.free[i]) idx.push_back(i);
  }
  return idx;
}

Eigen::MatrixXd FreeColumns(const Eigen::MatrixXd& jacobian,
                            const std::vector<int>& free) {
  Eigen::MatrixXd out(jacobian.rows(), static_cast<Eigen::Index>(free.size()));
  for (size_t c = 0; c < free.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = jacobian.col(free[c]);
  }
  return out;
}

struct SolveOutcome {
  DistortionParams params;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

// Levenberg-Marquardt with Marquardt's diagonal scaling over a fixed set of
// vertices.
SolveOutcome Solve(const LineSet& active, const PinholeSpec& pin,
                   const DistortionParams& start, const SolverConfig& config) {
  const std::vector<int> free = FreeIndices(config);
  SolveOutcome out;
  out.params = start;

  auto evaluate = [&](const DistortionParams& k, bool with_jacobian)
      -> std::optional<StraightnessResiduals> {
    const FisheyeModel model(k, pin, config.theta_max);
    if (!model.validity().monotone) return std::nullopt;
    return Evaluate(active, model, with_jacobian, /*strict=*/true);
  };

  auto current = evaluate(out.params, true);
  if (!current) {
    throw Error(ErrorCode::kInvalidModel,
                "initial parameters cannot map the line vertices");
  }
  double cost = 0.5 * current->values.squaredNorm();
  double damping = config.initial_damping;
  ParamVector x = out.params.ToVector();

  while (true) {
    const Eigen::MatrixXd jac = FreeColumns(current->jacobian, free);
    const Eigen::VectorXd gradient = jac.transpose() * current->values;
    out.gradient_norm = gradient.lpNorm<Eigen::Infinity>();
    if (out.gradient_norm <= config.gradient_tolerance) {
      out.converged = true;
      return out;
    }
    if (out.iterations >= config.max_iterations) return out;
    ++out.iterations;

    const Eigen::MatrixXd hessian = jac.transpose() * jac;
    Eigen::VectorXd scale = hessian.diagonal();
    const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
      scale[i] = std::max(scale[i], floor);
    }

    bool accepted = false;
    bool any_valid_trial = false;
    while (damping <= kMaxDamping) {
      Eigen::MatrixXd damped = hessian;
      damped.diagonal() += damping * scale;
      const Eigen::VectorXd step = damped.ldlt().solve(-gradient);

      double x_norm = 0.0;
      for (int idx : free) x_norm = std::max(x_norm, std::abs(x[idx]));
      if (step.lpNorm<Eigen::Infinity>() <=
          config.step_tolerance * (x_norm + config.step_tolerance)) {
        return out;
      }

      ParamVector trial_x = x;
      for (size_t c = 0; c < free.size(); ++c) {
        trial_x[free[c]] += step[static_cast<Eigen::Index>(c)];
      }
      const DistortionParams trial = DistortionParams::FromVector(trial_x);
      auto trial_eval = evaluate(trial, true);
      if (!trial_eval) {
        damping *= 10.0;
        continue;
      }
      any_valid_trial = true;
      const double trial_cost = 0.5 * trial_eval->values.squaredNorm();
      if (trial_cost < cost) {
        x = trial_x;
        out.params = trial;
        cost = trial_cost;
        current = std::move(trial_eval);
        damping = std::max(damping / 10.0, 1e-15);
        accepted = true;
        break;
      }
      damping *= 10.0;
    }
    if (!accepted) {
      if (!any_valid_trial) {
        throw Error(ErrorCode::kDivergedModel,
                    "no damped step keeps the radial profile monotone");
      }
      // No descent left at working precision, or the optimum lies on the
      // boundary of the monotone region.
      return out;
    }
  }
}

}  // namespace

void SolverConfig::Validate() const {
  if (max_iterations < 0) {
    throw Error(ErrorCode::kParse, "max_iterations must be >= 0");
  }
  if (!(gradient_tolerance > 0.0) || !(step_tolerance > 0.0) ||
      !(initial_damping > 0.0)) {
    throw Error(ErrorCode::kParse, "solver tolerances must be positive");
  }
  if (!(theta_max > 0.0) || !(theta_max < std::numbers::pi / 2)) {
    throw Error(ErrorCode::kParse, "theta_max must lie in (0, pi/2)");
  }
  if (FreeCount() == 0) {
    throw Error(ErrorCode::kParse, "at least one component must be free");
  }
}

int SolverConfig::FreeCount() const {
  return static_cast<int>(std::count(free.begin(), free.end(), true));
}

StraightnessResiduals straightness_residuals(const LineSet& lines,
                                             const DistortionParams& k,
                                             const PinholeSpec& pin,
                                             double theta_max,
                                             bool with_jacobian) {
  const FisheyeModel model = UsableModel(k, pin, theta_max);
  return *Evaluate(lines, model, with_jacobian, /*strict=*/false);
}

CalibrationResult estimate_params(const LineSet& lines, const PinholeSpec& pin,
                                  const DistortionParams& init,
                                  const SolverConfig& config) {
  config.Validate();
  pin.Validate();
  const FisheyeModel init_model(init, pin, config.theta_max);
  if (!init_model.validity().monotone) {
    throw Error(ErrorCode::kInvalidModel,
                "initial parameters are not monotone on [0, theta_max]");
  }

  LineSet active = ActiveVertices(lines, init_model);
  auto check_degenerate = [&](const LineSet& set) {
    const size_t informative = InformativeChains(set);
    if (informative < 2 ||
        set.VertexCount() < static_cast<size_t>(config.FreeCount())) {
      throw Error(ErrorCode::kDegenerateInput,
                  "need at least 2 chains with >= 3 usable vertices, have " +
                      std::to_string(informative));
    }
  };
  check_degenerate(active);

  SolveOutcome outcome;
  DistortionParams start = init;
  int total_iterations = 0;
  // Vertices unmappable under the initial guess may become mappable as the
  // profile moves; re-solve with the enlarged set when that happens.
  for (int pass = 0; pass < kMaxActiveSetPasses; ++pass) {
    outcome = Solve(active, pin, start, config);
    total_iterations += outcome.iterations;
    const FisheyeModel solved(outcome.params, pin, config.theta_max);
    LineSet enlarged = ActiveVertices(lines, solved);
    if (enlarged.VertexCount() <= active.VertexCount()) break;
    active = std::move(enlarged);
    start = outcome.params;
  }

  const FisheyeModel final_model(outcome.params, pin, config.theta_max);
  const StraightnessResiduals final_residuals =
      *Evaluate(lines, final_model, false, /*strict=*/false);

  CalibrationResult result;
  result.params = outcome.params;
  result.iterations = total_iterations;
  result.converged = outcome.converged;
  result.gradient_norm = outcome.gradient_norm;
  result.dropped_vertices = final_residuals.dropped;
  result.residuals.assign(final_residuals.values.data(),
                          final_residuals.values.data() +
                              final_residuals.values.size());
  result.rms_residual =
      final_residuals.values.size() > 0
          ? std::sqrt(final_residuals.values.squaredNorm() /
                      static_cast<double>(final_residuals.values.size()))
          : 0.0;
  return result;
}

std::array<bool, 5> ChainRegions(const Polyline& line, const PinholeSpec& pin) {
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : line.points) centroid += p;
  centroid /= static_cast<double>(std::max<size_t>(line.size(), 1));
  const double half_w = 0.5 * pin.width;
  const double half_h = 0.5 * pin.height;
  const double dx = centroid.x() - half_w;
  const double dy = centroid.y() - half_h;
  const bool left = dx < 0.0;
  const bool upper = dy < 0.0;
  return {std::abs(dx) <= 0.3 * pin.width && std::abs(dy) <= 0.3 * pin.height,
          left && upper, left && !upper, !left && upper, !left && !upper};
}

DistortionParams FuseEstimates(const DistortionParams& global,
                               const std::vector<DistortionParams>& regional) {
  DistortionParams fused = global;
  for (int i = 0; i < kNumRadialTerms; ++i) {
    double sum = global.k[i];
    for (const DistortionParams& r : regional) sum += r.k[i];
    fused.k[i] = sum / static_cast<double>(regional.size() + 1);
  }
  return fused;
}

CalibrationResult estimate_multiscale(const LineSet& lines,
                                      const PinholeSpec& pin,
                                      const DistortionParams& init,
                                      const SolverConfig& config) {
  CalibrationResult global = estimate_params(lines, pin, init, config);

  std::array<LineSet, 5> subsets;
  for (const Polyline& line : lines.lines) {
    const auto membership = ChainRegions(line, pin);
    for (size_t r = 0; r < subsets.size(); ++r) {
      if (membership[r]) subsets[r].lines.push_back(line);
    }
  }

  std::vector<RegionEstimate> regions;
  std::vector<DistortionParams> usable;
  for (size_t r = 0; r < subsets.size(); ++r) {
    RegionEstimate region;
    region.name = kRegionNames[r];
    region.chains = subsets[r].size();
    try {
      const CalibrationResult local =
          estimate_params(subsets[r], pin, init, config);
      region.status = RegionStatus::kOk;
      region.params = local.params;
      region.rms_residual = local.rms_residual;
      region.converged = local.converged;
      usable.push_back(local.params);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDegenerateInput) {
        region.status = RegionStatus::kDegenerate;
      } else if (e.code() == ErrorCode::kDivergedModel) {
        region.status = RegionStatus::kDiverged;
      } else {
        throw;
      }
    }
    regions.push_back(std::move(region));
  }

  CalibrationResult fused = global;
  if (usable.empty()) {
    fused.per_region = std::vector<RegionEstimate>{};
    return fused;
  }
  fused.params = FuseEstimates(global.params, usable);
  const StraightnessResiduals residuals =
      straightness_residuals(lines, fused.params, pin, config.theta_max);
  fused.residuals.assign(residuals.values.data(),
                         residuals.values.data() + residuals.values.size());
  fused.dropped_vertices = residuals.dropped;
  fused.rms_residual =
      residuals.values.size() > 0
          ? std::sqrt(residuals.values.squaredNorm() /
                      static_cast<double>(residuals.values.size()))
          : 0.0;
  fused.per_region = std::move(regions);
  return fused;
}

}  // namespace fishline
