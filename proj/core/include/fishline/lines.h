#pragma once

#include <cstdint>
#include <vector>

#include "fishline/camera_model.h"

namespace fishline {

// An ordered point chain. Distorted lines are curves, so they are carried as
// dense polylines and their arc length stands in for the segment length.
struct Polyline {
  std::vector<Vec2> points;

  double Length() const;
  size_t size() const { return points.size(); }
};

struct LineSet {
  std::vector<Polyline> lines;

  bool empty() const { return lines.empty(); }
  size_t size() const { return lines.size(); }
  size_t VertexCount() const;

  // Throws Error(kParse) unless every chain has >= 2 vertices with distinct
  // consecutive vertices.
  void Validate() const;

  // Drops repeated consecutive vertices, then chains left with < 2 vertices.
  LineSet Sanitized() const;
};

// Inserts vertices so that consecutive vertices are at most max_spacing
// apart. Original vertices are kept.
Polyline Densify(const Polyline& line, double max_spacing);
LineSet Densify(const LineSet& lines, double max_spacing);

double SquaredDistanceToSegment(const Vec2& p, const Vec2& a, const Vec2& b);
double SquaredDistanceToPolyline(const Vec2& p, const Polyline& line);

// Per-pixel length of the nearest line within 1 px, 0 elsewhere.
class LineHeatmap {
 public:
  LineHeatmap() = default;
  LineHeatmap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  double& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  double at(int x, int y) const {
    return data_[static_cast<size_t>(y) * width_ + x];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool SameShape(const LineHeatmap& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// Split of the lattice into pixels on a line (positive) and the rest.
class PixelPartition {
 public:
  PixelPartition(int width, int height, std::vector<std::uint8_t> positive);

  int width() const { return width_; }
  int height() const { return height_; }
  bool positive(int x, int y) const {
    return positive_[static_cast<size_t>(y) * width_ + x] != 0;
  }
  bool positive(size_t index) const { return positive_[index] != 0; }
  size_t positive_count() const { return positive_count_; }
  size_t negative_count() const { return positive_.size() - positive_count_; }
  size_t size() const { return positive_.size(); }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> positive_;
  size_t positive_count_;
};

// Ties between equally distant chains go to the longer chain.
LineHeatmap rasterize_heatmap(const LineSet& lines, int width, int height);

PixelPartition partition(const LineHeatmap& heatmap);

}  // namespace fishline
