#include "fishline/losses.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "fishline/error.h"

namespace fishline {
namespace {

void RequireSameShape(const LineHeatmap& a, const LineHeatmap& b) {
  if (!a.SameShape(b)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "heatmaps are " + std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " and " +
                    std::to_string(b.width()) + "x" +
                    std::to_string(b.height()));
  }
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

void LossWeights::Validate() const {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::kParse,
                  std::string("loss weight '") + name + "' must be >= 0");
    }
  };
  for (double w : omega) check(w, "omega");
  check(lambda_fus, "lambda_fus");
  check(lambda_glo, "lambda_glo");
  check(lambda_loc, "lambda_loc");
  check(lambda_m, "lambda_m");
  check(lambda_para, "lambda_para");
  check(lambda_geo, "lambda_geo");
  check(lambda_pix, "lambda_pix");
}

double line_loss(const LineHeatmap& pred, const LineHeatmap& gt) {
  RequireSameShape(pred, gt);
  const PixelPartition omega = partition(gt);
  double positive_sum = 0.0;
  double negative_sum = 0.0;
  for (size_t i = 0; i < gt.data().size(); ++i) {
    const double diff = gt.data()[i] - pred.data()[i];
    (omega.positive(i) ? positive_sum : negative_sum) += diff * diff;
  }
  const double n = static_cast<double>(omega.size());
  return (omega.negative_count() / n) * positive_sum +
         (omega.positive_count() / n) * negative_sum;
}

ParamLosses param_losses(const ParamVector& k_global,
                         const std::vector<LocalParams>& k_local,
                         const ParamVector& k_fused, const ParamVector& k_gt,
                         const LossWeights& weights) {
  if (k_local.size() != 5) {
    throw Error(ErrorCode::kDimensionMismatch,
                "expected 5 local parameter vectors, got " +
                    std::to_string(k_local.size()));
  }
  auto weighted_mse = [&](const ParamVector& k) {
    double acc = 0.0;
    for (int i = 0; i < kNumParams; ++i) {
      const double d = weights.omega[i] * (k[i] - k_gt[i]);
      acc += d * d;
    }
    return acc / 9.0;
  };
  ParamLosses out;
  out.glo = weighted_mse(k_global);
  out.fus = weighted_mse(k_fused);
  for (const LocalParams& local : k_local) {
    for (int i = 0; i < kNumRadialTerms; ++i) {
      const double d = weights.omega[i] * (local[i] - k_gt[i]);
      out.loc += d * d;
    }
  }
  out.loc /= 25.0;
  out.total = weights.lambda_fus * out.fus + weights.lambda_glo * out.glo +
              weights.lambda_loc * out.loc;
  return out;
}

std::optional<double> geometric_error(const Vec2& p_f,
                                      const FisheyeModel& k_hat,
                                      const FisheyeModel& k_gt) {
  const auto a = k_hat.TryUndistort(p_f);
  const auto b = k_gt.TryUndistort(p_f);
  if (!a || !b) return std::nullopt;
  return (*a - *b).lpNorm<1>();
}

GeoLoss geo_loss(const DistortionParams& k_hat, const DistortionParams& k_gt,
                 const PinholeSpec& pin, const LineHeatmap& gt_heatmap,
                 double lambda_m) {
  const FisheyeModel hat = MonotoneLatticeModel(k_hat, pin);
  const FisheyeModel gt = MonotoneLatticeModel(k_gt, pin);
  const PixelPartition omega = partition(gt_heatmap);

  GeoLoss out;
  out.width = gt_heatmap.width();
  out.height = gt_heatmap.height();
  out.error_map.assign(omega.size(), 0.0);
  double positive_sum = 0.0;
  double negative_sum = 0.0;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const size_t index = static_cast<size_t>(y) * out.width + x;
      const auto err = geometric_error(Vec2(x, y), hat, gt);
      if (!err) {
        ++out.excluded;
        continue;
      }
      out.error_map[index] = *err;
      (omega.positive(index) ? positive_sum : negative_sum) += *err;
    }
  }
  const double n = static_cast<double>(omega.size());
  out.value = (lambda_m / n) * positive_sum + (1.0 / n) * negative_sum;
  return out;
}

UncertaintyMap::UncertaintyMap(int width, int height,
                               std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (values_.size() != static_cast<size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "uncertainty values do not cover the lattice");
  }
}

UncertaintyMap normalize_uncertainty(int width, int height,
                                     const std::vector<double>& scores) {
  if (scores.size() != static_cast<size_t>(width) * height || scores.empty()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "score count does not match the lattice");
  }
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> values(scores.size());
  double sum = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    values[i] = std::exp(scores[i] - peak);
    sum += values[i];
  }
  for (double& v : values) v /= sum;
  return UncertaintyMap(width, height, std::move(values));
}

double uncertainty_pixel_loss(const ImageBuffer& rectified,
                              const ImageBuffer& ground_truth,
                              const UncertaintyMap& uncertainty) {
  if (!rectified.SameShape(ground_truth) ||
      rectified.width() != uncertainty.width() ||
      rectified.height() != uncertainty.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "image and uncertainty shapes differ");
  }
  const int channels = rectified.channels();
  double acc = 0.0;
  for (int y = 0; y < rectified.height(); ++y) {
    for (int x = 0; x < rectified.width(); ++x) {
      const double u = uncertainty.at(x, y);
      if (!(u > 0.0)) {
        throw Error(ErrorCode::kNonPositiveUncertainty,
                    "uncertainty at (" + std::to_string(x) + ", " +
                        std::to_string(y) + ") is not positive");
      }
      double l1 = 0.0;
      for (int c = 0; c < channels; ++c) {
        l1 += std::abs(rectified.at(x, y, c) - ground_truth.at(x, y, c));
      }
      l1 /= channels;
      acc += l1 / u + std::log(u);
    }
  }
  return acc / static_cast<double>(rectified.pixel_count());
}

double total_loss(const LossParts& parts, const LossWeights& weights) {
  return weights.lambda_para * parts.para + weights.lambda_geo * parts.geo +
         weights.lambda_pix * parts.pix;
}

}  // namespace fishline
