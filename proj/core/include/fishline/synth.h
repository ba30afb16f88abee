#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fishline/camera_model.h"
#include "fishline/image.h"
#include "fishline/lines.h"
#include "fishline/serialization.h"

namespace fishline {

// Portable random stream: mt19937_64 output with explicit conversions, so a
// seed yields the same numbers on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextBits() { return engine_(); }
  // Uniform on [lo, hi].
  double Uniform(double lo, double hi);
  double Normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

// Counter-based derivation of a per-sample stream seed.
std::uint64_t StreamSeed(std::uint64_t master, std::uint64_t source,
                         std::uint64_t draw);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SamplerConfig {
  int per_image = 8;
  // k1 in units of the pinhole focal length.
  Interval k1_over_f{0.5, 1.5};
  // k2/k1 .. k5/k1.
  std::array<Interval, 4> ratios{{{-0.1, 0.3}, {-0.05, 0.1}, {-0.02, 0.05},
                                  {-0.02, 0.05}}};
  // Max |u0 - W/2|, |v0 - H/2| in pixels; 5% of the image size when unset.
  std::optional<double> center_jitter;
  Interval m_range{0.9, 1.1};
  double theta_max = 1.2;
  std::uint64_t seed = 0;
  // Output lattice (fisheye and perspective views share it).
  int width = 320;
  int height = 320;
  // Pinhole focal length as a fraction of the width.
  double focal_over_width = 0.5;

  void Validate() const;
  PinholeSpec Pinhole() const;
};

// Rejection-samples until the profile is monotone on [0, theta_max]. Throws
// SamplingExhausted after 1000 rejections.
DistortionParams sample_params(Rng& rng, const SamplerConfig& config);

struct DataSample {
  std::string id;
  ImageBuffer fisheye;
  ValidityMask fisheye_mask;
  ImageBuffer ground_truth;
  LineSet lines_distorted;
  LineHeatmap heatmap_distorted;
  LineSet lines_straight;
  LineHeatmap heatmap_straight;
  DistortionParams params;
  PinholeSpec pinhole;
};

// Resizes the source to the pinhole lattice, distorts it, and maps the
// densified straight chains through the model. Chains are cut where they
// leave the model range or the fisheye lattice; straight and distorted
// chains stay vertex-aligned.
DataSample generate_sample(const ImageBuffer& source, const LineSet& lines,
                           const DistortionParams& k, const PinholeSpec& pin);

// Straight segments of the rectified view mapped into the fisheye lattice,
// `vertices` samples per chain. Used to build calibration fixtures.
LineSet GenerateDistortedChains(Rng& rng, const DistortionParams& k,
                                const PinholeSpec& pin, int chains,
                                int vertices, double min_length = 60.0);

// 16-bit PNG holding round(length) per pixel. When a length exceeds 65535 the
// exact values also go to a "<path>.json" sidecar, which the reader prefers.
void WriteHeatmapFile(const std::filesystem::path& path,
                      const LineHeatmap& heatmap);
LineHeatmap ReadHeatmapFile(const std::filesystem::path& path);

struct SourceError {
  std::string source;
  std::string message;
};

struct Manifest {
  std::filesystem::path path;
  std::vector<Json> records;
  std::vector<SourceError> errors;
};

// Corpus layout: <name>.png with a <name>.json line annotation. Writes
// per_image samples per source plus manifest.jsonl into out_dir.
Manifest generate_dataset(const std::filesystem::path& corpus_dir,
                          const SamplerConfig& config,
                          const std::filesystem::path& out_dir);

}  // namespace fishline
