#include "fishline/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <string>

#include "fishline/error.h"
#include "fishline/image_io.h"
#include "fishline/warp.h"

namespace fishline {
namespace {

constexpr int kMaxRejections = 1000;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void CheckInterval(const Interval& interval, const std::string& name) {
  if (!(interval.lo <= interval.hi) || !std::isfinite(interval.lo) ||
      !std::isfinite(interval.hi)) {
    throw Error(ErrorCode::kParse, "interval '" + name + "' is empty");
  }
}

ImageBuffer ResizeBilinear(const ImageBuffer& src, int width, int height) {
  if (src.width() == width && src.height() == height) return src;
  ImageBuffer out(width, height, src.channels());
  const double sx = width > 1 ? (src.width() - 1.0) / (width - 1.0) : 0.0;
  const double sy = height > 1 ? (src.height() - 1.0) / (height - 1.0) : 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Clamped: x * sx may round just past the last source column.
      const PixelValue v =
          bilinear_sample(src, std::min(x * sx, src.width() - 1.0),
                          std::min(y * sy, src.height() - 1.0));
      for (int c = 0; c < src.channels(); ++c) out.at(x, y, c) = v[c];
    }
  }
  return out;
}

bool InsideLattice(const Vec2& p, int width, int height) {
  return p.x() >= 0.0 && p.x() <= width - 1 && p.y() >= 0.0 &&
         p.y() <= height - 1;
}

}  // namespace

double Rng::Uniform(double lo, double hi) {
  if (lo == hi) return lo;
  const double u = static_cast<double>(NextBits() >> 11) * 0x1.0p-53;
  return std::min(hi, lo + (hi - lo) * u);
}

double Rng::Normal(double mean, double stddev) {
  if (spare_normal_) {
    const double z = *spare_normal_;
    spare_normal_.reset();
    return mean + stddev * z;
  }
  const double u1 = (static_cast<double>(NextBits() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(NextBits() >> 11) * 0x1.0p-53;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  spare_normal_ = radius * std::sin(2.0 * std::numbers::pi * u2);
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t StreamSeed(std::uint64_t master, std::uint64_t source,
                         std::uint64_t draw) {
  return SplitMix64(SplitMix64(SplitMix64(master) ^ source) ^ draw);
}

void SamplerConfig::Validate() const {
  if (per_image < 1) throw Error(ErrorCode::kParse, "per_image must be >= 1");
  if (width < 2 || height < 2) {
    throw Error(ErrorCode::kParse, "output lattice must be at least 2x2");
  }
  CheckInterval(k1_over_f, "k1");
  for (size_t i = 0; i < ratios.size(); ++i) {
    CheckInterval(ratios[i], "k" + std::to_string(i + 2) + "/k1");
  }
  CheckInterval(m_range, "m");
  if (!(k1_over_f.lo > 0.0)) {
    throw Error(ErrorCode::kParse, "k1 range must be positive");
  }
  if (!(m_range.lo > 0.0)) {
    throw Error(ErrorCode::kParse, "m range must be positive");
  }
  if (center_jitter && !(*center_jitter >= 0.0)) {
    throw Error(ErrorCode::kParse, "center jitter must be >= 0");
  }
  if (!(theta_max > 0.0 && theta_max < std::numbers::pi / 2)) {
    throw Error(ErrorCode::kParse, "theta_max must lie in (0, pi/2)");
  }
  if (!(focal_over_width > 0.0)) {
    throw Error(ErrorCode::kParse, "focal length must be positive");
  }
}

PinholeSpec SamplerConfig::Pinhole() const {
  PinholeSpec pin;
  pin.f = focal_over_width * width;
  pin.cx = 0.5 * width;
  pin.cy = 0.5 * height;
  pin.width = width;
  pin.height = height;
  return pin;
}

static Gray16 QuantizeHeatmap(const LineHeatmap& heatmap) {
  Gray16 out{heatmap.width(), heatmap.height(), {}};
  out.data.resize(heatmap.data().size());
  for (size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = static_cast<std::uint16_t>(
        std::min(65535.0, std::round(heatmap.data()[i])));
  }
  return out;
}

void WriteHeatmapFile(const std::filesystem::path& path,
                      const LineHeatmap& heatmap) {
  WriteGray16Png(path, QuantizeHeatmap(heatmap));
  const double peak = heatmap.data().empty()
                          ? 0.0
                          : *std::max_element(heatmap.data().begin(),
                                              heatmap.data().end());
  if (peak > 65535.0) {
    Json sidecar;
    sidecar["width"] = heatmap.width();
    sidecar["height"] = heatmap.height();
    sidecar["values"] = heatmap.data();
    WriteJsonFile(path.string() + ".json", sidecar, -1);
  }
}

LineHeatmap ReadHeatmapFile(const std::filesystem::path& path) {
  const std::filesystem::path sidecar = path.string() + ".json";
  if (std::filesystem::exists(sidecar)) {
    const Json j = ReadJsonFile(sidecar);
    try {
      LineHeatmap heatmap(j.at("width").get<int>(), j.at("height").get<int>());
      const auto values = j.at("values").get<std::vector<double>>();
      if (values.size() != heatmap.data().size()) {
        throw Error(ErrorCode::kParse, "heatmap sidecar '" + sidecar.string() +
                                           "' has the wrong value count");
      }
      heatmap.data() = values;
      return heatmap;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse,
                  "heatmap sidecar '" + sidecar.string() + "': " + e.what());
    }
  }
  const Gray16 raw = ReadGray16Png(path);
  LineHeatmap heatmap(raw.width, raw.height);
  for (size_t i = 0; i < raw.data.size(); ++i) heatmap.data()[i] = raw.data[i];
  return heatmap;
}

DistortionParams sample_params(Rng& rng, const SamplerConfig& config) {
  config.Validate();
  const PinholeSpec pin = config.Pinhole();
  const double jitter_x = config.center_jitter.value_or(0.05 * config.width);
  const double jitter_y = config.center_jitter.value_or(0.05 * config.height);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    DistortionParams k;
    k.k[0] = pin.f * rng.Uniform(config.k1_over_f.lo, config.k1_over_f.hi);
    for (size_t i = 0; i < config.ratios.size(); ++i) {
      k.k[i + 1] = k.k[0] * rng.Uniform(config.ratios[i].lo, config.ratios[i].hi);
    }
    k.mu = rng.Uniform(config.m_range.lo, config.m_range.hi);
    k.mv = rng.Uniform(config.m_range.lo, config.m_range.hi);
    k.u0 = 0.5 * config.width + rng.Uniform(-jitter_x, jitter_x);
    k.v0 = 0.5 * config.height + rng.Uniform(-jitter_y, jitter_y);
    if (validate_params(k, config.theta_max).monotone) return k;
  }
  throw Error(ErrorCode::kSamplingExhausted,
              "no monotone parameter set after " +
                  std::to_string(kMaxRejections) + " draws");
}

DataSample generate_sample(const ImageBuffer& source, const LineSet& lines,
                           const DistortionParams& k, const PinholeSpec& pin) {
  pin.Validate();
  DataSample sample;
  sample.params = k;
  sample.pinhole = pin;
  sample.ground_truth = ResizeBilinear(source, pin.width, pin.height);

  WarpResult fisheye =
      distort_image(sample.ground_truth, k, pin, pin.width, pin.height);
  sample.fisheye = std::move(fisheye.image);
  sample.fisheye_mask = std::move(fisheye.mask);

  const double sx = source.width() > 1
                        ? (pin.width - 1.0) / (source.width() - 1.0)
                        : 1.0;
  const double sy = source.height() > 1
                        ? (pin.height - 1.0) / (source.height() - 1.0)
                        : 1.0;
  LineSet scaled;
  for (const Polyline& line : lines.lines) {
    Polyline s;
    for (const Vec2& p : line.points) s.points.emplace_back(p.x() * sx, p.y() * sy);
    scaled.lines.push_back(std::move(s));
  }
  const LineSet dense = Densify(scaled.Sanitized(), 1.0);

  const FisheyeModel model(k, pin, std::max(required_theta_max(pin), 1e-6));
  for (const Polyline& line : dense.lines) {
    Polyline straight_run;
    Polyline distorted_run;
    auto flush = [&]() {
      if (distorted_run.size() >= 2) {
        sample.lines_straight.lines.push_back(straight_run);
        sample.lines_distorted.lines.push_back(distorted_run);
      }
      straight_run.points.clear();
      distorted_run.points.clear();
    };
    for (const Vec2& p_r : line.points) {
      const auto p_f = model.TryDistort(p_r);
      if (!p_f || !InsideLattice(*p_f, pin.width, pin.height)) {
        flush();
        continue;
      }
      straight_run.points.push_back(p_r);
      distorted_run.points.push_back(*p_f);
    }
    flush();
  }
  sample.heatmap_distorted =
      rasterize_heatmap(sample.lines_distorted, pin.width, pin.height);
  sample.heatmap_straight =
      rasterize_heatmap(sample.lines_straight, pin.width, pin.height);
  return sample;
}

LineSet GenerateDistortedChains(Rng& rng, const DistortionParams& k,
                                const PinholeSpec& pin, int chains,
                                int vertices, double min_length) {
  const FisheyeModel model(k, pin, std::max(required_theta_max(pin), 1e-6));
  LineSet out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < chains) {
    if (++attempts > 1000 * std::max(chains, 1)) {
      throw Error(ErrorCode::kSamplingExhausted,
                  "cannot place chains inside the fisheye lattice");
    }
    const Vec2 a(rng.Uniform(0.0, pin.width - 1.0),
                 rng.Uniform(0.0, pin.height - 1.0));
    const Vec2 b(rng.Uniform(0.0, pin.width - 1.0),
                 rng.Uniform(0.0, pin.height - 1.0));
    if ((b - a).norm() < min_length) continue;
    Polyline line;
    bool inside = true;
    for (int i = 0; i < vertices && inside; ++i) {
      const double t = static_cast<double>(i) / (vertices - 1);
      const auto p_f = model.TryDistort(a + t * (b - a));
      inside = p_f && InsideLattice(*p_f, pin.width, pin.height);
      if (inside) line.points.push_back(*p_f);
    }
    if (inside) out.lines.push_back(std::move(line));
  }
  return out;
}

Manifest generate_dataset(const std::filesystem::path& corpus_dir,
                          const SamplerConfig& config,
                          const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  config.Validate();
  if (!fs::is_directory(corpus_dir)) {
    throw Error(ErrorCode::kIo,
                "corpus '" + corpus_dir.string() + "' is not a directory");
  }
  fs::create_directories(out_dir);

  // stem -> (has image, has annotation)
  std::map<std::string, std::pair<bool, bool>> sources;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    const std::string stem = entry.path().stem().string();
    if (ext == ".png") sources[stem].first = true;
    if (ext == ".json") sources[stem].second = true;
  }

  const PinholeSpec pin = config.Pinhole();
  Manifest manifest;
  manifest.path = out_dir / "manifest.jsonl";
  std::uint64_t source_index = 0;
  for (const auto& [stem, present] : sources) {
    const std::uint64_t index = source_index++;
    ImageBuffer image;
    LineSet lines;
    try {
      if (!present.first) {
        throw Error(ErrorCode::kIo, "missing image " + stem + ".png");
      }
      if (!present.second) {
        throw Error(ErrorCode::kIo, "missing annotation " + stem + ".json");
      }
      image = ReadPng(corpus_dir / (stem + ".png"));
      lines = LineSetFromJson(ReadJsonFile(corpus_dir / (stem + ".json")));
    } catch (const Error& e) {
      manifest.errors.push_back({stem, e.what()});
      continue;
    }

    for (int draw = 0; draw < config.per_image; ++draw) {
      Rng rng(StreamSeed(config.seed, index, static_cast<std::uint64_t>(draw)));
      const DistortionParams k = sample_params(rng, config);
      const DataSample sample = generate_sample(image, lines, k, pin);
      const std::string id = stem + "_" + std::to_string(draw);

      Json record;
      record["id"] = id;
      record["fisheye"] = id + "_fisheye.png";
      record["gt_image"] = id + "_gt.png";
      record["lines_distorted"] = id + "_lines_distorted.json";
      record["lines_straight"] = id + "_lines_straight.json";
      record["heatmap_distorted"] = id + "_heatmap_distorted.png";
      record["heatmap_straight"] = id + "_heatmap_straight.png";
      record["params"] = ToJson(k);
      record["pinhole"] = ToJson(pin);

      WritePng(out_dir / record["fisheye"].get<std::string>(), sample.fisheye);
      WritePng(out_dir / record["gt_image"].get<std::string>(),
               sample.ground_truth);
      WriteJsonFile(out_dir / record["lines_distorted"].get<std::string>(),
                    ToJson(sample.lines_distorted), -1);
      WriteJsonFile(out_dir / record["lines_straight"].get<std::string>(),
                    ToJson(sample.lines_straight), -1);
      WriteHeatmapFile(out_dir / record["heatmap_distorted"].get<std::string>(),
                       sample.heatmap_distorted);
      WriteHeatmapFile(out_dir / record["heatmap_straight"].get<std::string>(),
                       sample.heatmap_straight);
      manifest.records.push_back(std::move(record));
    }
  }

  std::ofstream out(manifest.path);
  if (!out) {
    throw Error(ErrorCode::kIo, "cannot write '" + manifest.path.string() + "'");
  }
  for (const Json& record : manifest.records) out << record.dump() << '\n';
  for (const SourceError& error : manifest.errors) {
    Json line;
    line["error"] = error.message;
    line["source"] = error.source;
    out << line.dump() << '\n';
  }
  return manifest;
}

}  // namespace fishline
