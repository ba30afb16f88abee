#include "fishline/warp.h"

#include <cmath>
#include <limits>
#include <string>

#include "fishline/error.h"

namespace fishline {
namespace {

// Monotone model over every angle the pinhole lattice reaches.
FisheyeModel LatticeModel(const DistortionParams& k, const PinholeSpec& pin) {
  pin.Validate();
  const double needed = std::max(required_theta_max(pin), 1e-6);
  FisheyeModel model(k, pin, needed);
  if (!model.validity().monotone) {
    throw Error(ErrorCode::kInvalidModel,
                "radial profile is not monotone up to theta=" +
                    std::to_string(needed) + " (derivative vanishes at " +
                    std::to_string(model.validity().theta_max) + ")");
  }
  return model;
}

void Store(ImageBuffer& image, int x, int y, const PixelValue& value) {
  for (int c = 0; c < image.channels(); ++c) image.at(x, y, c) = value[c];
}

WarpResult Rectify(const ImageBuffer& fisheye, const ValidityMask* source_mask,
                   const DistortionParams& k, const PinholeSpec& pin) {
  const FisheyeModel model = LatticeModel(k, pin);
  WarpResult out{ImageBuffer(pin.width, pin.height, fisheye.channels()),
                 ValidityMask(pin.width, pin.height)};
  PixelValue value;
  for (int y = 0; y < pin.height; ++y) {
    for (int x = 0; x < pin.width; ++x) {
      const auto p_f = model.TryDistort(Vec2(x, y));
      if (!p_f) continue;
      if (!TryBilinearSample(fisheye, p_f->x(), p_f->y(), value, source_mask)) {
        continue;
      }
      Store(out.image, x, y, value);
      out.mask.set(x, y, true);
    }
  }
  return out;
}

}  // namespace

bool TryBilinearSample(const ImageBuffer& image, double x, double y,
                       PixelValue& out, const ValidityMask* source_mask) {
  const int w = image.width();
  const int h = image.height();
  if (!(x >= 0.0 && x <= w - 1 && y >= 0.0 && y <= h - 1)) return false;
  const int x0 = std::min(static_cast<int>(x), std::max(w - 2, 0));
  const int y0 = std::min(static_cast<int>(y), std::max(h - 2, 0));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;
  if (source_mask != nullptr) {
    const ValidityMask& m = *source_mask;
    if ((w00 > 0.0 && !m(x0, y0)) || (w10 > 0.0 && !m(x1, y0)) ||
        (w01 > 0.0 && !m(x0, y1)) || (w11 > 0.0 && !m(x1, y1))) {
      return false;
    }
  }
  out = {0.0, 0.0, 0.0};
  for (int c = 0; c < image.channels(); ++c) {
    // Exact at lattice points: zero weights drop out of the sum.
    double v = 0.0;
    if (w00 > 0.0) v += w00 * image.at(x0, y0, c);
    if (w10 > 0.0) v += w10 * image.at(x1, y0, c);
    if (w01 > 0.0) v += w01 * image.at(x0, y1, c);
    if (w11 > 0.0) v += w11 * image.at(x1, y1, c);
    out[c] = v;
  }
  return true;
}

PixelValue bilinear_sample(const ImageBuffer& image, double x, double y) {
  PixelValue value;
  if (!TryBilinearSample(image, x, y, value)) {
    throw Error(ErrorCode::kOutOfBounds, "sample (" + std::to_string(x) + ", " +
                                             std::to_string(y) +
                                             ") outside image");
  }
  return value;
}

WarpResult rectify_image(const ImageBuffer& fisheye, const DistortionParams& k,
                         const PinholeSpec& pin) {
  return Rectify(fisheye, nullptr, k, pin);
}

WarpResult rectify_image(const ImageBuffer& fisheye,
                         const ValidityMask& source_mask,
                         const DistortionParams& k, const PinholeSpec& pin) {
  if (source_mask.width() != fisheye.width() ||
      source_mask.height() != fisheye.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "source mask does not match the fisheye image");
  }
  return Rectify(fisheye, &source_mask, k, pin);
}

WarpResult distort_image(const ImageBuffer& perspective,
                         const DistortionParams& k, const PinholeSpec& pin,
                         int out_width, int out_height) {
  const FisheyeModel model = LatticeModel(k, pin);
  WarpResult out{ImageBuffer(out_width, out_height, perspective.channels()),
                 ValidityMask(out_width, out_height)};
  PixelValue value;
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const auto p_r = model.TryUndistort(Vec2(x, y));
      if (!p_r) continue;
      if (!TryBilinearSample(perspective, p_r->x(), p_r->y(), value)) continue;
      Store(out.image, x, y, value);
      out.mask.set(x, y, true);
    }
  }
  return out;
}

FisheyeModel UsableModel(const DistortionParams& k, const PinholeSpec& pin,
                         double theta_max) {
  FisheyeModel model(k, pin, theta_max);
  if (model.validity().monotone) return model;
  const double usable = model.validity().theta_max * (1.0 - 1e-9);
  if (!(usable > 0.0)) {
    throw Error(ErrorCode::kInvalidModel,
                "radial profile has no increasing range");
  }
  return FisheyeModel(k, pin, usable);
}

LineSet RectifiedLines::MappedLines() const {
  LineSet out;
  for (size_t i = 0; i < lines.size(); ++i) {
    Polyline run;
    auto flush = [&]() {
      if (run.size() >= 2) out.lines.push_back(run);
      run.points.clear();
    };
    for (size_t j = 0; j < lines.lines[i].size(); ++j) {
      if (status[i][j] == VertexStatus::kOutOfValidRange) {
        flush();
      } else {
        run.points.push_back(lines.lines[i].points[j]);
      }
    }
    flush();
  }
  return out;
}

RectifiedLines rectify_points(const LineSet& lines, const DistortionParams& k,
                              const PinholeSpec& pin, double theta_max) {
  const FisheyeModel model = UsableModel(k, pin, theta_max);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  RectifiedLines out;
  out.lines.lines.reserve(lines.size());
  out.status.reserve(lines.size());
  for (const Polyline& line : lines.lines) {
    Polyline mapped;
    std::vector<VertexStatus> status;
    mapped.points.reserve(line.size());
    for (const Vec2& p_f : line.points) {
      const auto p_r = model.TryUndistort(p_f);
      if (!p_r) {
        mapped.points.emplace_back(nan, nan);
        status.push_back(VertexStatus::kOutOfValidRange);
        ++out.out_of_range;
        continue;
      }
      const bool inside = p_r->x() >= 0.0 && p_r->x() <= pin.width - 1 &&
                          p_r->y() >= 0.0 && p_r->y() <= pin.height - 1;
      mapped.points.push_back(*p_r);
      status.push_back(inside ? VertexStatus::kOk : VertexStatus::kOffLattice);
      if (!inside) ++out.off_lattice;
    }
    out.lines.lines.push_back(std::move(mapped));
    out.status.push_back(std::move(status));
  }
  return out;
}

}  // namespace fishline
