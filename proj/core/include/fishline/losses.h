#pragma once

#include <array>
#include <vector>

#include "fishline/camera_model.h"
#include "fishline/image.h"
#include "fishline/lines.h"

namespace fishline {

// Loss balance weights. Defaults are the published training settings.
struct LossWeights {
  std::array<double, kNumParams> omega{0.1, 0.1, 0.5, 1.0, 1.0,
                                       0.1, 0.1, 0.1, 0.1};
  double lambda_fus = 2.0;
  double lambda_glo = 1.0;
  double lambda_loc = 1.0;
  double lambda_m = 2.0;
  double lambda_para = 1.0;
  double lambda_geo = 100.0;
  double lambda_pix = 1.0;

  // Throws Error(kParse) when any weight is negative or non-finite.
  void Validate() const;
};

// Class-balanced squared error: positive pixels of gt weighted by the
// negative fraction and vice versa.
double line_loss(const LineHeatmap& pred, const LineHeatmap& gt);

using LocalParams = std::array<double, kNumRadialTerms>;

struct ParamLosses {
  double glo = 0.0;
  double loc = 0.0;
  double fus = 0.0;
  double total = 0.0;
};

ParamLosses param_losses(const ParamVector& k_global,
                         const std::vector<LocalParams>& k_local,
                         const ParamVector& k_fused, const ParamVector& k_gt,
                         const LossWeights& weights);

struct GeoLoss {
  int width = 0;
  int height = 0;
  // Per-fisheye-pixel L1 distance between the two rectified positions.
  std::vector<double> error_map;
  double value = 0.0;
  // Pixels that one of the models cannot map; they contribute 0.
  size_t excluded = 0;
};

// L1 distance between the rectified positions of one fisheye pixel under two
// models. Empty when either model cannot map it.
std::optional<double> geometric_error(const Vec2& p_f,
                                      const FisheyeModel& k_hat,
                                      const FisheyeModel& k_gt);

// gt_heatmap sets the fisheye lattice and its positive pixels are weighted
// by lambda_m. Throws InvalidModel when either profile is not monotone over
// the angles of the pinhole lattice.
GeoLoss geo_loss(const DistortionParams& k_hat, const DistortionParams& k_gt,
                 const PinholeSpec& pin, const LineHeatmap& gt_heatmap,
                 double lambda_m);

class UncertaintyMap {
 public:
  UncertaintyMap(int width, int height, std::vector<double> values);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int x, int y) const {
    return values_[static_cast<size_t>(y) * width_ + x];
  }
  const std::vector<double>& values() const { return values_; }

 private:
  int width_;
  int height_;
  std::vector<double> values_;
};

// Softmax over the whole pixel domain (max-subtracted).
UncertaintyMap normalize_uncertainty(int width, int height,
                                     const std::vector<double>& scores);

// mean_p [ l(p) / U(p) + log U(p) ] with l(p) the channel-mean absolute
// difference.
double uncertainty_pixel_loss(const ImageBuffer& rectified,
                              const ImageBuffer& ground_truth,
                              const UncertaintyMap& uncertainty);

struct LossParts {
  double para = 0.0;
  double geo = 0.0;
  double pix = 0.0;
};

double total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace fishline
