#include "fishline/image.h"

#include <algorithm>
#include <string>

#include "fishline/error.h"

namespace fishline {

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || (channels != 1 && channels != 3)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "unsupported image shape " + std::to_string(width) + "x" +
                    std::to_string(height) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<size_t>(width) * height * channels, fill);
}

double ImageBuffer::Luma(int x, int y) const {
  if (channels_ == 1) return at(x, y);
  return 0.299 * at(x, y, 0) + 0.587 * at(x, y, 1) + 0.114 * at(x, y, 2);
}

ValidityMask::ValidityMask(int width, int height, bool fill)
    : width_(width),
      height_(height),
      data_(static_cast<size_t>(width) * height, fill ? 1 : 0) {}

size_t ValidityMask::CountValid() const {
  return static_cast<size_t>(std::count(data_.begin(), data_.end(), 1));
}

ValidityMask ValidityMask::operator&(const ValidityMask& other) const {
  if (width_ != other.width_ || height_ != other.height_) {
    throw Error(ErrorCode::kDimensionMismatch, "mask shapes differ");
  }
  ValidityMask out(width_, height_);
  for (size_t i = 0; i < data_.size(); ++i) {
    out.data_[i] = data_[i] & other.data_[i];
  }
  return out;
}

}  // namespace fishline
