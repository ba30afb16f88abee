#pragma once

#include <cstdint>
#include <vector>

namespace fishline {

// Row-major image with samples in [0, 1]. Quantization to 8 bit happens only
// at file I/O.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  size_t pixel_count() const {
    return static_cast<size_t>(width_) * static_cast<size_t>(height_);
  }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  // BT.601 luma for 3-channel images, the sample itself otherwise.
  double Luma(int x, int y) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool SameShape(const ImageBuffer& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

class ValidityMask {
 public:
  ValidityMask() = default;
  ValidityMask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }

  bool operator()(int x, int y) const {
    return data_[static_cast<size_t>(y) * width_ + x] != 0;
  }
  void set(int x, int y, bool value) {
    data_[static_cast<size_t>(y) * width_ + x] = value ? 1 : 0;
  }

  size_t CountValid() const;
  ValidityMask operator&(const ValidityMask& other) const;

  const std::vector<std::uint8_t>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

}  // namespace fishline
