#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "fishline/camera_model.h"
#include "fishline/image.h"
#include "fishline/lines.h"
#include "fishline/synth.h"

namespace fishline::testing {

// Setup shared by the small closed-form cases: f = 300 around (160, 160),
// equidistant k1 = 300 centered at (160, 160).
inline PinholeSpec SmallPinhole() {
  PinholeSpec pin;
  pin.f = 300.0;
  pin.cx = 160.0;
  pin.cy = 160.0;
  pin.width = 320;
  pin.height = 320;
  return pin;
}

inline DistortionParams SmallEquidistant(double k1 = 300.0) {
  return DistortionParams::Equidistant(k1, 160.0, 160.0);
}

// Checkerboard of 20 px cells with tinted gradients, 3 channels.
inline ImageBuffer TestCard(int width, int height) {
  ImageBuffer card(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const bool check = ((x / 20) + (y / 20)) % 2 == 0;
      const double base = check ? 0.8 : 0.2;
      card.at(x, y, 0) = base * (0.5 + 0.5 * x / std::max(1, width - 1));
      card.at(x, y, 1) = base;
      card.at(x, y, 2) = base * (0.5 + 0.5 * y / std::max(1, height - 1));
    }
  }
  return card;
}

// TestCard under a separable Gaussian of the given sigma (edge-clamped).
// sigma = 1 keeps it alias-free under the 2x compression of k1 = 0.5 f.
inline ImageBuffer BandLimitedCard(int width, int height, double sigma = 1.0) {
  const ImageBuffer card = TestCard(width, height);
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> weights(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    weights[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += weights[i + radius];
  }
  for (double& w : weights) w /= total;
  ImageBuffer rows(width, height, 3);
  ImageBuffer out(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          sum += weights[i + radius] * card.at(std::clamp(x + i, 0, width - 1), y, c);
        }
        rows.at(x, y, c) = sum;
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          sum += weights[i + radius] * rows.at(x, std::clamp(y + i, 0, height - 1), c);
        }
        out.at(x, y, c) = sum;
      }
    }
  }
  return out;
}

// Smooth low-frequency card used where interpolation error must stay small.
inline ImageBuffer SmoothCard(int width, int height) {
  ImageBuffer card(width, height, 3);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = 2.0 * M_PI * x / width;
      const double v = 2.0 * M_PI * y / height;
      card.at(x, y, 0) = 0.5 + 0.4 * std::sin(2 * u) * std::cos(v);
      card.at(x, y, 1) = 0.5 + 0.4 * std::cos(3 * v + u);
      card.at(x, y, 2) = 0.5 + 0.3 * std::sin(u + 2 * v);
    }
  }
  return card;
}

// Exhaustive per-pixel reference for rasterize_heatmap, in extended
// precision: nearest chain by point-to-polyline distance, value = its
// arc length when that distance is at most 1, longer chain on ties.
inline LineHeatmap BruteForceHeatmap(const LineSet& lines, int width,
                                     int height) {
  auto chain_length = [](const Polyline& line) {
    double total = 0.0;
    for (size_t i = 1; i < line.points.size(); ++i) {
      total += (line.points[i] - line.points[i - 1]).norm();
    }
    return total;
  };
  auto point_to_chain = [](long double px, long double py,
                           const Polyline& line) {
    long double best = INFINITY;
    for (size_t i = 1; i < line.points.size(); ++i) {
      const long double ax = line.points[i - 1].x();
      const long double ay = line.points[i - 1].y();
      const long double bx = line.points[i].x();
      const long double by = line.points[i].y();
      const long double dx = bx - ax;
      const long double dy = by - ay;
      const long double len2 = dx * dx + dy * dy;
      long double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0;
      t = t < 0 ? 0 : (t > 1 ? 1 : t);
      const long double ex = px - (ax + t * dx);
      const long double ey = py - (ay + t * dy);
      best = std::min(best, ex * ex + ey * ey);
    }
    return best;
  };
  LineHeatmap out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      long double best = INFINITY;
      double value = 0.0;
      for (const Polyline& line : lines.lines) {
        if (line.points.size() < 2) continue;
        const long double d2 = point_to_chain(x, y, line);
        const double length = chain_length(line);
        if (d2 > 1.0L) continue;
        if (d2 < best || (d2 == best && length > value)) {
          best = d2;
          value = length;
        }
      }
      out.at(x, y) = value;
    }
  }
  return out;
}

// Random chains of 2..6 vertices inside a width x height lattice.
inline LineSet RandomLineSet(std::mt19937_64& rng, int width, int height,
                             int chains) {
  std::uniform_real_distribution<double> ux(-2.0, width + 1.0);
  std::uniform_real_distribution<double> uy(-2.0, height + 1.0);
  std::uniform_int_distribution<int> count(2, 6);
  LineSet set;
  for (int c = 0; c < chains; ++c) {
    Polyline line;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) line.points.emplace_back(ux(rng), uy(rng));
    set.lines.push_back(line);
  }
  return set.Sanitized();
}

// Two-vertex segments of 60..180 px lying wholly inside the lattice.
inline LineSet SegmentLineSet(std::mt19937_64& rng, int width, int height,
                              int count) {
  std::uniform_real_distribution<double> ux(10.0, width - 11.0);
  std::uniform_real_distribution<double> uy(10.0, height - 11.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> length(60.0, 180.0);
  LineSet lines;
  while (static_cast<int>(lines.size()) < count) {
    const Vec2 a(ux(rng), uy(rng));
    const double t = angle(rng);
    const Vec2 b = a + length(rng) * Vec2(std::cos(t), std::sin(t));
    if (b.x() < 0 || b.y() < 0 || b.x() > width - 1 || b.y() > height - 1) {
      continue;
    }
    lines.lines.push_back(Polyline{{a, b}});
  }
  return lines;
}

inline double MaxAbsDiff(const std::vector<double>& a,
                         const std::vector<double>& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

// Largest orthogonal distance of the points to the line through the first
// and last point.
inline double ChordDeviation(const Polyline& line) {
  const Vec2 a = line.points.front();
  const Vec2 b = line.points.back();
  const Vec2 d = (b - a).normalized();
  double worst = 0.0;
  for (const Vec2& p : line.points) {
    const Vec2 e = p - a;
    worst = std::max(worst, std::abs(e.x() * d.y() - e.y() * d.x()));
  }
  return worst;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fishline_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Calibration fixture: sampled truth with unit pixel scales (the gauge keeps
// them at their initial values), straight chains mapped into the fisheye
// lattice and optional isotropic vertex noise.
struct CalibrationFixture {
  DistortionParams truth;
  PinholeSpec pin;
  LineSet lines;
};

// Minimum chain length, as a fraction of the width, for the noisy recovery
// fixture. Long chains are the usual plumb-line setup.
inline constexpr double kLongChainFraction = 0.75;

inline CalibrationFixture MakeCalibrationFixture(std::uint64_t seed,
                                                 int chains, int vertices,
                                                 double noise,
                                                 double min_length = 60.0) {
  SamplerConfig config;
  Rng rng(seed);
  CalibrationFixture f;
  f.pin = config.Pinhole();
  f.truth = sample_params(rng, config);
  f.truth.mu = 1.0;
  f.truth.mv = 1.0;
  f.lines = GenerateDistortedChains(rng, f.truth, f.pin, chains, vertices,
                                    min_length);
  if (noise > 0.0) {
    for (Polyline& line : f.lines.lines) {
      for (Vec2& p : line.points) {
        p.x() += rng.Normal(0.0, noise);
        p.y() += rng.Normal(0.0, noise);
      }
    }
  }
  return f;
}

// Writes `sources` corpus pairs: a test card and a line annotation whose
// chains stay shorter than 200 px after resizing to 320x320.
void WriteCorpus(const std::filesystem::path& dir, int sources);

}  // namespace fishline::testing
