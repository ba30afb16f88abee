#pragma once

#include <array>
#include <vector>

#include "fishline/camera_model.h"
#include "fishline/image.h"
#include "fishline/lines.h"

namespace fishline {

// Per-channel sample; entries past image.channels() are zero.
using PixelValue = std::array<double, 3>;

// 4-neighbour bilinear interpolation with pixel centers on integer
// coordinates. Throws OutOfBounds outside [0, w-1] x [0, h-1].
PixelValue bilinear_sample(const ImageBuffer& image, double x, double y);

// Same as bilinear_sample but reports out-of-bounds by returning false. When
// source_mask is given, any masked-out tap with non-zero weight also fails.
bool TryBilinearSample(const ImageBuffer& image, double x, double y,
                       PixelValue& out,
                       const ValidityMask* source_mask = nullptr);

struct WarpResult {
  ImageBuffer image;
  ValidityMask mask;
};

// Backward warp onto the pinhole lattice: each output pixel samples the
// fisheye image at distort(p_r). Masked pixels are written as 0. Throws
// InvalidModel when the profile is not monotone over the angles the lattice
// needs.
WarpResult rectify_image(const ImageBuffer& fisheye, const DistortionParams& k,
                         const PinholeSpec& pin);

// As above, additionally rejecting samples that touch pixels invalid in
// source_mask (used to compose a rectification with a prior distortion).
WarpResult rectify_image(const ImageBuffer& fisheye,
                         const ValidityMask& source_mask,
                         const DistortionParams& k, const PinholeSpec& pin);

// Backward warp onto a fisheye lattice of out_width x out_height: each output
// pixel samples the perspective image at undistort(p_f).
WarpResult distort_image(const ImageBuffer& perspective,
                         const DistortionParams& k, const PinholeSpec& pin,
                         int out_width, int out_height);

enum class VertexStatus {
  kOk,
  kOffLattice,      // mapped, but outside the pinhole lattice
  kOutOfValidRange, // not mappable; coordinates are NaN
};

struct RectifiedLines {
  // Same grouping and vertex count as the input.
  LineSet lines;
  std::vector<std::vector<VertexStatus>> status;
  size_t out_of_range = 0;
  size_t off_lattice = 0;

  // Chains with unmappable vertices removed (runs of >= 2 kept).
  LineSet MappedLines() const;
};

RectifiedLines rectify_points(const LineSet& lines, const DistortionParams& k,
                              const PinholeSpec& pin,
                              double theta_max = kDefaultThetaMax);

// Model restricted to the part of [0, theta_max] on which the profile is
// strictly increasing. Throws InvalidModel if that part is empty.
FisheyeModel UsableModel(const DistortionParams& k, const PinholeSpec& pin,
                         double theta_max);

}  // namespace fishline
