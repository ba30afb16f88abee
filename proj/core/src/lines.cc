#include "fishline/lines.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fishline/error.h"

namespace fishline {

double Polyline::Length() const {
  double length = 0.0;
  for (size_t i = 1; i < points.size(); ++i) {
    length += (points[i] - points[i - 1]).norm();
  }
  return length;
}

size_t LineSet::VertexCount() const {
  size_t n = 0;
  for (const Polyline& line : lines) n += line.size();
  return n;
}

void LineSet::Validate() const {
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto& pts = lines[i].points;
    if (pts.size() < 2) {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(i) + " has fewer than 2 vertices");
    }
    for (size_t j = 0; j < pts.size(); ++j) {
      if (!pts[j].allFinite()) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(i) +
                                           " has a non-finite vertex");
      }
      if (j > 0 && pts[j] == pts[j - 1]) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(i) +
                                           " repeats vertex " +
                                           std::to_string(j));
      }
    }
  }
}

LineSet LineSet::Sanitized() const {
  LineSet out;
  for (const Polyline& line : lines) {
    Polyline clean;
    for (const Vec2& p : line.points) {
      if (!p.allFinite()) continue;
      if (!clean.points.empty() && clean.points.back() == p) continue;
      clean.points.push_back(p);
    }
    if (clean.size() >= 2) out.lines.push_back(std::move(clean));
  }
  return out;
}

Polyline Densify(const Polyline& line, double max_spacing) {
  Polyline out;
  if (line.points.empty()) return out;
  out.points.push_back(line.points.front());
  for (size_t i = 1; i < line.points.size(); ++i) {
    const Vec2& a = line.points[i - 1];
    const Vec2& b = line.points[i];
    const int pieces =
        std::max(1, static_cast<int>(std::ceil((b - a).norm() / max_spacing)));
    for (int s = 1; s < pieces; ++s) {
      out.points.push_back(a + (b - a) * (static_cast<double>(s) / pieces));
    }
    out.points.push_back(b);
  }
  return out;
}

LineSet Densify(const LineSet& lines, double max_spacing) {
  LineSet out;
  out.lines.reserve(lines.size());
  for (const Polyline& line : lines.lines) {
    out.lines.push_back(Densify(line, max_spacing));
  }
  return out;
}

double SquaredDistanceToSegment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).squaredNorm();
}

double SquaredDistanceToPolyline(const Vec2& p, const Polyline& line) {
  double best = std::numeric_limits<double>::infinity();
  if (line.points.size() == 1) return (p - line.points[0]).squaredNorm();
  for (size_t i = 1; i < line.points.size(); ++i) {
    best = std::min(best,
                    SquaredDistanceToSegment(p, line.points[i - 1], line.points[i]));
  }
  return best;
}

LineHeatmap::LineHeatmap(int width, int height)
    : width_(width),
      height_(height),
      data_(static_cast<size_t>(width) * height, 0.0) {}

PixelPartition::PixelPartition(int width, int height,
                               std::vector<std::uint8_t> positive)
    : width_(width),
      height_(height),
      positive_(std::move(positive)),
      positive_count_(static_cast<size_t>(
          std::count(positive_.begin(), positive_.end(), 1))) {}

LineHeatmap rasterize_heatmap(const LineSet& lines, int width, int height) {
  LineHeatmap heatmap(width, height);
  std::vector<double> best_d2(heatmap.data().size(),
                              std::numeric_limits<double>::infinity());

  for (const Polyline& line : lines.lines) {
    if (line.points.size() < 2) continue;
    const double length = line.Length();
    for (size_t i = 1; i < line.points.size(); ++i) {
      const Vec2& a = line.points[i - 1];
      const Vec2& b = line.points[i];
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - 1.0)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max(a.x(), b.x()) + 1.0)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - 1.0)));
      const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max(a.y(), b.y()) + 1.0)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d2 = SquaredDistanceToSegment(Vec2(x, y), a, b);
          if (d2 > 1.0) continue;
          const size_t index = static_cast<size_t>(y) * width + x;
          double& best = best_d2[index];
          double& value = heatmap.data()[index];
          if (d2 < best || (d2 == best && length > value)) {
            best = d2;
            value = length;
          }
        }
      }
    }
  }
  return heatmap;
}

PixelPartition partition(const LineHeatmap& heatmap) {
  std::vector<std::uint8_t> positive(heatmap.data().size());
  for (size_t i = 0; i < positive.size(); ++i) {
    positive[i] = heatmap.data()[i] > 0.0 ? 1 : 0;
  }
  return PixelPartition(heatmap.width(), heatmap.height(), std::move(positive));
}

}  // namespace fishline
