#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fishline/camera_model.h"
#include "fishline/image.h"
#include "fishline/lines.h"

namespace fishline {

// Reported for identical images instead of +inf.
inline constexpr double kPsnrCap = 99.0;

// PSNR over masked pixels in 8-bit units, capped at kPsnrCap.
double psnr(const ImageBuffer& a, const ImageBuffer& b,
            const ValidityMask& mask, double peak = 255.0);

// Mean SSIM over 11x11 Gaussian windows (sigma 1.5) lying fully inside the
// mask, on 8-bit luma.
double ssim(const ImageBuffer& a, const ImageBuffer& b,
            const ValidityMask& mask);

struct RpeResult {
  double mean = 0.0;  // NaN when no pixel is valid under both models
  size_t valid = 0;
  size_t excluded = 0;
};

// L2 distance between the rectified positions of one fisheye pixel.
std::optional<double> reprojection_error(const Vec2& p_f,
                                         const FisheyeModel& k_hat,
                                         const FisheyeModel& k_gt);

// Mean reprojection error over a width x height fisheye lattice. Throws
// InvalidModel when either profile is not monotone over the pinhole lattice.
RpeResult rpe(const DistortionParams& k_hat, const DistortionParams& k_gt,
              const PinholeSpec& pin, int width, int height);

enum class ThresholdMode {
  kAtMost,   // 0 < value <= tau
  kAtLeast,  // value >= tau
};

struct MetricConfig {
  std::vector<double> tau_list{5, 10, 20, 40, 80, 120, 160, 200, 240, 255};
  // Pixels; when unset, 1% of the image diagonal.
  std::optional<double> match_tolerance;
  double psnr_peak = 255.0;
  ThresholdMode threshold_mode = ThresholdMode::kAtMost;

  void Validate() const;
  double ToleranceFor(int width, int height) const;
};

struct PRPoint {
  double tau = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  size_t matched = 0;
  size_t predicted = 0;
  size_t ground_truth = 0;
};

struct PRCurve {
  std::vector<PRPoint> points;
  double f_max = 0.0;
};

// Greedy one-to-one matching of edge pixels, nearest pairs first, ties in
// row-major order of (predicted, ground truth). Returns the matched count.
size_t MatchEdgePixels(const std::vector<std::uint8_t>& predicted,
                       const std::vector<std::uint8_t>& ground_truth,
                       int width, int height, double tolerance);

PRCurve line_pr(const LineHeatmap& rectified, const LineHeatmap& gt,
                const MetricConfig& config = {});

}  // namespace fishline
