#include "fishline/metrics.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "fishline/error.h"

namespace fishline {
namespace {

void RequireShapes(const ImageBuffer& a, const ImageBuffer& b,
                   const ValidityMask& mask) {
  if (!a.SameShape(b) || mask.width() != a.width() ||
      mask.height() != a.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "images and mask must share one shape");
  }
}

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;

std::array<double, 2 * kSsimRadius + 1> GaussianKernel1D() {
  std::array<double, 2 * kSsimRadius + 1> kernel{};
  double sum = 0.0;
  for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
    kernel[i + kSsimRadius] = std::exp(-(i * i) / (2.0 * kSsimSigma * kSsimSigma));
    sum += kernel[i + kSsimRadius];
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

FisheyeModel MonotoneLatticeModel(const DistortionParams& k,
                                  const PinholeSpec& pin) {
  FisheyeModel model(k, pin, std::max(required_theta_max(pin), 1e-6));
  if (!model.validity().monotone) {
    throw Error(ErrorCode::kInvalidModel,
                "radial profile is not monotone over the pinhole lattice");
  }
  return model;
}

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b,
            const ValidityMask& mask, double peak) {
  RequireShapes(a, b, mask);
  double sum = 0.0;
  size_t count = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < a.channels(); ++c) {
        const double d = 255.0 * (a.at(x, y, c) - b.at(x, y, c));
        sum += d * d;
        ++count;
      }
    }
  }
  if (count == 0) throw Error(ErrorCode::kEmptyMask, "PSNR mask is empty");
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b,
            const ValidityMask& mask) {
  RequireShapes(a, b, mask);
  const int w = a.width();
  const int h = a.height();
  constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);
  const auto g = GaussianKernel1D();

  std::vector<double> la(static_cast<size_t>(w) * h);
  std::vector<double> lb(la.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      la[static_cast<size_t>(y) * w + x] = 255.0 * a.Luma(x, y);
      lb[static_cast<size_t>(y) * w + x] = 255.0 * b.Luma(x, y);
    }
  }
  // Summed-area table of the mask for the "window fully inside" test.
  std::vector<int> sat(static_cast<size_t>(w + 1) * (h + 1), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      sat[(y + 1) * (w + 1) + x + 1] = (mask(x, y) ? 1 : 0) +
                                       sat[y * (w + 1) + x + 1] +
                                       sat[(y + 1) * (w + 1) + x] -
                                       sat[y * (w + 1) + x];
    }
  }
  constexpr int kSide = 2 * kSsimRadius + 1;
  auto window_full = [&](int cx, int cy) {
    const int x0 = cx - kSsimRadius;
    const int y0 = cy - kSsimRadius;
    const int x1 = x0 + kSide;
    const int y1 = y0 + kSide;
    return sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] -
               sat[y1 * (w + 1) + x0] + sat[y0 * (w + 1) + x0] ==
           kSide * kSide;
  };

  double total = 0.0;
  size_t windows = 0;
  for (int cy = kSsimRadius; cy + kSsimRadius < h; ++cy) {
    for (int cx = kSsimRadius; cx + kSsimRadius < w; ++cx) {
      if (!window_full(cx, cy)) continue;
      double mu_a = 0.0, mu_b = 0.0, e_aa = 0.0, e_bb = 0.0, e_ab = 0.0;
      for (int dy = -kSsimRadius; dy <= kSsimRadius; ++dy) {
        const size_t row = static_cast<size_t>(cy + dy) * w;
        for (int dx = -kSsimRadius; dx <= kSsimRadius; ++dx) {
          const double wt = g[dy + kSsimRadius] * g[dx + kSsimRadius];
          const double va = la[row + cx + dx];
          const double vb = lb[row + cx + dx];
          mu_a += wt * va;
          mu_b += wt * vb;
          e_aa += wt * (va * va);
          e_bb += wt * (vb * vb);
          e_ab += wt * (va * vb);
        }
      }
      const double var_a = e_aa - mu_a * mu_a;
      const double var_b = e_bb - mu_b * mu_b;
      const double cov = e_ab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++windows;
    }
  }
  if (windows == 0) {
    throw Error(ErrorCode::kEmptyMask, "no SSIM window lies inside the mask");
  }
  return total / static_cast<double>(windows);
}

std::optional<double> reprojection_error(const Vec2& p_f,
                                         const FisheyeModel& k_hat,
                                         const FisheyeModel& k_gt) {
  const auto a = k_hat.TryUndistort(p_f);
  const auto b = k_gt.TryUndistort(p_f);
  if (!a || !b) return std::nullopt;
  return (*a - *b).norm();
}

RpeResult rpe(const DistortionParams& k_hat, const DistortionParams& k_gt,
              const PinholeSpec& pin, int width, int height) {
  const FisheyeModel hat = MonotoneLatticeModel(k_hat, pin);
  const FisheyeModel gt = MonotoneLatticeModel(k_gt, pin);
  RpeResult out;
  double sum = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto err = reprojection_error(Vec2(x, y), hat, gt);
      if (!err) {
        ++out.excluded;
        continue;
      }
      sum += *err;
      ++out.valid;
    }
  }
  out.mean = out.valid > 0 ? sum / static_cast<double>(out.valid)
                           : std::numeric_limits<double>::quiet_NaN();
  return out;
}

void MetricConfig::Validate() const {
  if (tau_list.empty()) {
    throw Error(ErrorCode::kParse, "tau_list must not be empty");
  }
  for (size_t i = 1; i < tau_list.size(); ++i) {
    if (!(tau_list[i] > tau_list[i - 1])) {
      throw Error(ErrorCode::kParse, "tau_list must be strictly increasing");
    }
  }
  if (match_tolerance && !(*match_tolerance > 0.0)) {
    throw Error(ErrorCode::kParse, "match_tolerance must be positive");
  }
}

double MetricConfig::ToleranceFor(int width, int height) const {
  if (match_tolerance) return *match_tolerance;
  return 0.01 * std::hypot(static_cast<double>(width),
                           static_cast<double>(height));
}

size_t MatchEdgePixels(const std::vector<std::uint8_t>& predicted,
                       const std::vector<std::uint8_t>& ground_truth,
                       int width, int height, double tolerance) {
  const double tol2 = tolerance * tolerance;
  const int reach = static_cast<int>(std::floor(tolerance));
  // (squared distance, predicted index, gt index)
  std::vector<std::tuple<double, size_t, size_t>> candidates;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const size_t p = static_cast<size_t>(y) * width + x;
      if (!predicted[p]) continue;
      for (int gy = std::max(0, y - reach); gy <= std::min(height - 1, y + reach); ++gy) {
        for (int gx = std::max(0, x - reach); gx <= std::min(width - 1, x + reach); ++gx) {
          const size_t g = static_cast<size_t>(gy) * width + gx;
          if (!ground_truth[g]) continue;
          const double d2 = static_cast<double>((gx - x) * (gx - x) + (gy - y) * (gy - y));
          if (d2 <= tol2) candidates.emplace_back(d2, p, g);
        }
      }
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<std::uint8_t> p_used(predicted.size(), 0);
  std::vector<std::uint8_t> g_used(ground_truth.size(), 0);
  size_t matched = 0;
  for (const auto& [d2, p, g] : candidates) {
    if (p_used[p] || g_used[g]) continue;
    p_used[p] = 1;
    g_used[g] = 1;
    ++matched;
  }
  return matched;
}

PRCurve line_pr(const LineHeatmap& rectified, const LineHeatmap& gt,
                const MetricConfig& config) {
  if (!rectified.SameShape(gt)) {
    throw Error(ErrorCode::kDimensionMismatch, "heatmaps differ in shape");
  }
  config.Validate();
  const int w = gt.width();
  const int h = gt.height();
  const double tolerance = config.ToleranceFor(w, h);

  std::vector<std::uint8_t> gt_edges(gt.data().size());
  size_t gt_count = 0;
  for (size_t i = 0; i < gt_edges.size(); ++i) {
    gt_edges[i] = gt.data()[i] > 0.0 ? 1 : 0;
    gt_count += gt_edges[i];
  }

  PRCurve curve;
  std::vector<std::uint8_t> edges(gt_edges.size());
  for (double tau : config.tau_list) {
    size_t count = 0;
    for (size_t i = 0; i < edges.size(); ++i) {
      const double v = rectified.data()[i];
      const bool keep = config.threshold_mode == ThresholdMode::kAtMost
                            ? (v > 0.0 && v <= tau)
                            : (v > 0.0 && v >= tau);
      edges[i] = keep ? 1 : 0;
      count += edges[i];
    }
    PRPoint point;
    point.tau = tau;
    point.predicted = count;
    point.ground_truth = gt_count;
    point.matched = MatchEdgePixels(edges, gt_edges, w, h, tolerance);
    point.precision = count > 0 ? static_cast<double>(point.matched) / count : 0.0;
    point.recall = gt_count > 0 ? static_cast<double>(point.matched) / gt_count : 0.0;
    const double denom = point.precision + point.recall;
    point.f = denom > 0.0 ? 2.0 * point.precision * point.recall / denom : 0.0;
    curve.f_max = std::max(curve.f_max, point.f);
    curve.points.push_back(point);
  }
  return curve;
}

}  // namespace fishline
