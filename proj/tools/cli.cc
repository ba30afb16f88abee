#include "cli.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fishline/calibrate.h"
#include "fishline/camera_model.h"
#include "fishline/error.h"
#include "fishline/image_io.h"
#include "fishline/losses.h"
#include "fishline/metrics.h"
#include "fishline/serialization.h"
#include "fishline/synth.h"
#include "fishline/warp.h"

namespace fishline::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kParamNames[kNumParams] = {"k1", "k2", "k3", "k4", "k5",
                                                 "mu", "mv", "u0", "v0"};

std::string Num(double value) {
  std::ostringstream os;
  os << std::setprecision(10) << value;
  return os.str();
}

std::ofstream OpenOutput(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  return out;
}

std::vector<Json> ReadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::vector<Json> records;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + ":" +
                                         std::to_string(number) + ": " +
                                         e.what());
    }
  }
  return records;
}

std::string Field(const Json& record, const char* name) {
  if (!record.contains(name) || !record[name].is_string()) {
    throw Error(ErrorCode::kParse,
                std::string("manifest record lacks string field '") + name +
                    "'");
  }
  return record[name].get<std::string>();
}

fs::path Resolve(const fs::path& base, const std::string& relative) {
  const fs::path p(relative);
  return p.is_absolute() ? p : base / p;
}

// --- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string corpus;
  std::string out;
  SamplerConfig config;
  std::vector<double> k1_over_f;
  std::array<std::vector<double>, 4> ratios;
  std::vector<double> m_range;
  std::optional<double> center_jitter;
};

Interval ToInterval(const std::vector<double>& v) { return {v[0], v[1]}; }

int RunSynth(SynthArgs& args, std::ostream& out) {
  SamplerConfig config = args.config;
  if (!args.k1_over_f.empty()) config.k1_over_f = ToInterval(args.k1_over_f);
  for (size_t i = 0; i < args.ratios.size(); ++i) {
    if (!args.ratios[i].empty()) config.ratios[i] = ToInterval(args.ratios[i]);
  }
  if (!args.m_range.empty()) config.m_range = ToInterval(args.m_range);
  config.center_jitter = args.center_jitter;

  const Manifest manifest = generate_dataset(args.corpus, config, args.out);
  for (const SourceError& error : manifest.errors) {
    out << "skipped " << error.source << ": " << error.message << "\n";
  }
  out << "samples: " << manifest.records.size() << "\n";
  out << "manifest: " << manifest.path.string() << "\n";
  return kExitOk;
}

// --- rectify ----------------------------------------------------------------

struct RectifyArgs {
  std::string image;
  std::string params;
  std::string pinhole;
  std::string out;
  std::string mask;
};

int RunRectify(const RectifyArgs& args, std::ostream& out) {
  const DistortionParams k = ParamsFromJson(ReadJsonFile(args.params));
  const PinholeSpec pin = PinholeFromJson(ReadJsonFile(args.pinhole));
  const ImageBuffer fisheye = ReadPng(args.image);
  const WarpResult result = rectify_image(fisheye, k, pin);

  fs::path mask_path = args.mask;
  if (mask_path.empty()) {
    const fs::path out_path(args.out);
    mask_path = out_path.parent_path() /
                (out_path.stem().string() + "_mask" +
                 out_path.extension().string());
  }
  WritePng(args.out, result.image);
  WriteMaskPng(mask_path, result.mask);
  out << "rectified: " << args.out << "\n";
  out << "mask: " << mask_path.string() << "\n";
  return kExitOk;
}

// --- calibrate --------------------------------------------------------------

struct CalibrateArgs {
  std::string lines;
  std::string pinhole;
  std::string init;
  std::string out;
  std::string histogram;
  int bins = 20;
  bool multiscale = false;
  SolverConfig solver;
  std::vector<std::string> free;
};

void WriteHistogram(const fs::path& path, const std::vector<double>& values,
                    int bins) {
  std::ofstream csv = OpenOutput(path);
  csv << "bin_lo,bin_hi,count\n";
  if (values.empty()) return;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    csv << Num(lo) << "," << Num(hi) << "," << values.size() << "\n";
    return;
  }
  std::vector<size_t> counts(bins, 0);
  const double width = (hi - lo) / bins;
  for (double v : values) {
    const int b = std::min(bins - 1, static_cast<int>((v - lo) / width));
    ++counts[b];
  }
  for (int b = 0; b < bins; ++b) {
    csv << Num(lo + b * width) << "," << Num(lo + (b + 1) * width) << ","
        << counts[b] << "\n";
  }
}

int RunCalibrate(const CalibrateArgs& args, std::ostream& out) {
  const LineSet lines = LineSetFromJson(ReadJsonFile(args.lines));
  const PinholeSpec pin = PinholeFromJson(ReadJsonFile(args.pinhole));
  pin.Validate();
  const DistortionParams init =
      args.init.empty() ? DistortionParams::Equidistant(pin.f, pin.cx, pin.cy)
                        : ParamsFromJson(ReadJsonFile(args.init));
  SolverConfig solver = args.solver;
  if (!args.free.empty()) {
    solver.free.fill(false);
    for (const std::string& name : args.free) {
      const auto it = std::find(std::begin(kParamNames), std::end(kParamNames),
                                name);
      if (it == std::end(kParamNames)) {
        throw CLI::ValidationError("--free", "unknown component '" + name + "'");
      }
      solver.free[it - std::begin(kParamNames)] = true;
    }
  }

  const CalibrationResult result =
      args.multiscale ? estimate_multiscale(lines, pin, init, solver)
                      : estimate_params(lines, pin, init, solver);
  if (fs::path(args.out).has_parent_path()) {
    fs::create_directories(fs::path(args.out).parent_path());
  }
  WriteJsonFile(args.out, ToJson(result));
  if (!args.histogram.empty()) {
    WriteHistogram(args.histogram, result.residuals, args.bins);
  }
  out << "rms_residual=" << Num(result.rms_residual) << "\n";
  out << "converged=" << (result.converged ? "true" : "false") << "\n";
  out << "iterations=" << result.iterations << "\n";
  return kExitOk;
}

// --- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::string report;
  std::string pr;
  std::string losses;
  std::optional<double> tolerance;
  bool at_least = false;
  double lambda_m = LossWeights{}.lambda_m;
};

struct SampleScores {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
  double rpe = 0.0;
  double f = 0.0;
  double line = 0.0;
  double geo = 0.0;
  PRCurve curve;
};

std::map<std::string, Json> IndexById(const std::vector<Json>& records,
                                      const std::string& label) {
  std::map<std::string, Json> index;
  for (const Json& record : records) {
    if (record.contains("error")) continue;
    const std::string id = Field(record, "id");
    if (!index.emplace(id, record).second) {
      throw Error(ErrorCode::kParse,
                  "duplicate sample id '" + id + "' in " + label + " manifest");
    }
  }
  return index;
}

SampleScores EvaluateSample(const Json& gt, const fs::path& gt_dir,
                            const Json& pred, const fs::path& pred_dir,
                            const MetricConfig& metric, double lambda_m) {
  SampleScores s;
  s.id = Field(gt, "id");
  const DistortionParams k_gt = ParamsFromJson(gt.at("params"));
  const PinholeSpec pin = PinholeFromJson(gt.at("pinhole"));
  if (!pred.contains("params")) {
    throw Error(ErrorCode::kParse,
                "prediction '" + s.id + "' lacks field 'params'");
  }
  const DistortionParams k_hat = ParamsFromJson(pred.at("params"));

  const ImageBuffer fisheye = ReadPng(Resolve(gt_dir, Field(gt, "fisheye")));
  const ImageBuffer gt_image = ReadPng(Resolve(gt_dir, Field(gt, "gt_image")));
  const ValidityMask fisheye_mask =
      distort_image(gt_image, k_gt, pin, fisheye.width(), fisheye.height())
          .mask;
  WarpResult rectified = rectify_image(fisheye, fisheye_mask, k_hat, pin);
  ValidityMask mask = rectified.mask;
  if (pred.contains("rectified")) {
    rectified.image = ReadPng(Resolve(pred_dir, Field(pred, "rectified")));
  }
  if (pred.contains("mask")) {
    mask = mask & ReadMaskPng(Resolve(pred_dir, Field(pred, "mask")));
  }
  if (!rectified.image.SameShape(gt_image)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "rectified image of '" + s.id +
                    "' does not match the ground-truth shape");
  }
  s.psnr = psnr(rectified.image, gt_image, mask, metric.psnr_peak);
  s.ssim = ssim(rectified.image, gt_image, mask);
  s.rpe = rpe(k_hat, k_gt, pin, fisheye.width(), fisheye.height()).mean;

  const LineHeatmap gt_straight =
      ReadHeatmapFile(Resolve(gt_dir, Field(gt, "heatmap_straight")));
  LineHeatmap heatmap;
  if (pred.contains("heatmap_rectified")) {
    heatmap = ReadHeatmapFile(Resolve(pred_dir, Field(pred, "heatmap_rectified")));
  } else {
    const LineSet distorted =
        LineSetFromJson(ReadJsonFile(Resolve(gt_dir, Field(gt, "lines_distorted"))));
    heatmap = rasterize_heatmap(rectify_points(distorted, k_hat, pin).MappedLines(),
                                gt_straight.width(), gt_straight.height());
  }
  if (!heatmap.SameShape(gt_straight)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "rectified heatmap of '" + s.id +
                    "' does not match the ground-truth shape");
  }
  s.curve = line_pr(heatmap, gt_straight, metric);
  s.f = s.curve.f_max;
  s.line = line_loss(heatmap, gt_straight);
  const LineHeatmap gt_distorted =
      ReadHeatmapFile(Resolve(gt_dir, Field(gt, "heatmap_distorted")));
  s.geo = geo_loss(k_hat, k_gt, pin, gt_distorted, lambda_m).value;
  return s;
}

double FiniteMean(const std::vector<double>& values) {
  double sum = 0.0;
  size_t n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
}

int RunEval(const EvalArgs& args, std::ostream& out) {
  MetricConfig metric;
  metric.match_tolerance = args.tolerance;
  metric.threshold_mode =
      args.at_least ? ThresholdMode::kAtLeast : ThresholdMode::kAtMost;
  metric.Validate();

  const fs::path gt_path(args.gt);
  const fs::path pred_path(args.pred);
  const auto gt_index = IndexById(ReadManifest(gt_path), "ground-truth");
  const auto pred_index = IndexById(ReadManifest(pred_path), "prediction");
  for (const auto& [id, record] : gt_index) {
    if (!pred_index.count(id)) {
      throw Error(ErrorCode::kParse,
                  "sample id '" + id + "' has no prediction");
    }
  }
  for (const auto& [id, record] : pred_index) {
    if (!gt_index.count(id)) {
      throw Error(ErrorCode::kParse,
                  "sample id '" + id + "' is not in the ground-truth manifest");
    }
  }

  std::vector<SampleScores> scores;
  for (const auto& [id, gt] : gt_index) {
    scores.push_back(EvaluateSample(gt, gt_path.parent_path(),
                                    pred_index.at(id), pred_path.parent_path(),
                                    metric, args.lambda_m));
  }

  auto column = [&](double SampleScores::*field) {
    std::vector<double> values;
    for (const SampleScores& s : scores) values.push_back(s.*field);
    return FiniteMean(values);
  };

  std::ofstream report = OpenOutput(args.report);
  report << "id,psnr,ssim,rpe,f\n";
  for (const SampleScores& s : scores) {
    report << s.id << "," << Num(s.psnr) << "," << Num(s.ssim) << ","
           << Num(s.rpe) << "," << Num(s.f) << "\n";
  }
  const double mean_psnr = column(&SampleScores::psnr);
  const double mean_ssim = column(&SampleScores::ssim);
  const double mean_rpe = column(&SampleScores::rpe);
  const double mean_f = column(&SampleScores::f);
  report << "mean," << Num(mean_psnr) << "," << Num(mean_ssim) << ","
         << Num(mean_rpe) << "," << Num(mean_f) << "\n";

  if (!args.pr.empty()) {
    std::ofstream pr = OpenOutput(args.pr);
    pr << "tau,precision,recall,f\n";
    for (size_t t = 0; t < metric.tau_list.size(); ++t) {
      std::vector<double> p, r, f;
      for (const SampleScores& s : scores) {
        p.push_back(s.curve.points[t].precision);
        r.push_back(s.curve.points[t].recall);
        f.push_back(s.curve.points[t].f);
      }
      pr << Num(metric.tau_list[t]) << "," << Num(FiniteMean(p)) << ","
         << Num(FiniteMean(r)) << "," << Num(FiniteMean(f)) << "\n";
    }
  }
  if (!args.losses.empty()) {
    std::ofstream losses = OpenOutput(args.losses);
    losses << "id,line,geo\n";
    for (const SampleScores& s : scores) {
      losses << s.id << "," << Num(s.line) << "," << Num(s.geo) << "\n";
    }
    losses << "mean," << Num(column(&SampleScores::line)) << ","
           << Num(column(&SampleScores::geo)) << "\n";
  }

  out << "samples: " << scores.size() << "\n";
  out << "psnr=" << Num(mean_psnr) << " ssim=" << Num(mean_ssim)
      << " rpe=" << Num(mean_rpe) << " f=" << Num(mean_f) << "\n";
  return kExitOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  std::uint64_t seed = 0;
  int trials = 100;
  bool inject_fault = false;
};

int RunGradcheckCommand(const GradcheckArgs& args, std::ostream& out,
                        std::ostream& err) {
  const GradcheckReport report =
      RunGradcheck(args.seed, args.trials, args.inject_fault);
  std::ostringstream value;
  value << std::scientific << std::setprecision(6)
        << report.max_relative_error;
  out << "max_relative_error=" << value.str() << "\n";
  if (!(report.max_relative_error <= kGradcheckTolerance)) {
    err << "gradcheck failed: " << report.worst << "\n";
    return kExitModel;
  }
  return kExitOk;
}

std::string OneLine(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

}  // namespace

GradcheckReport RunGradcheck(std::uint64_t seed, int trials,
                             bool inject_fault) {
  constexpr double kStep = 1e-6;
  const SamplerConfig config;
  const PinholeSpec pin = config.Pinhole();
  GradcheckReport report;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(StreamSeed(seed, 0, static_cast<std::uint64_t>(trial)));
    const DistortionParams k = sample_params(rng, config);
    const FisheyeModel model(k, pin, config.theta_max);
    const Vec2 p_r(rng.Uniform(0.0, pin.width - 1.0),
                   rng.Uniform(0.0, pin.height - 1.0));
    const Vec2 p_f = model.Distort(p_r);
    ParamJacobian analytic_d = model.DistortionJacobian(p_r);
    const ParamJacobian analytic_u = model.UndistortionJacobian(p_f);
    if (inject_fault) analytic_d(0, kK2) = -analytic_d(0, kK2);

    for (int i = 0; i < kNumParams; ++i) {
      ParamVector plus = k.ToVector();
      ParamVector minus = plus;
      plus(i) += kStep;
      minus(i) -= kStep;
      const FisheyeModel model_plus(DistortionParams::FromVector(plus), pin,
                                    config.theta_max);
      const FisheyeModel model_minus(DistortionParams::FromVector(minus), pin,
                                     config.theta_max);
      const Vec2 numeric_d =
          (model_plus.Distort(p_r) - model_minus.Distort(p_r)) / (2 * kStep);
      const Vec2 numeric_u =
          (model_plus.Undistort(p_f) - model_minus.Undistort(p_f)) /
          (2 * kStep);
      for (int row = 0; row < 2; ++row) {
        const std::pair<const char*, std::pair<double, double>> entries[] = {
            {"distort", {analytic_d(row, i), numeric_d(row)}},
            {"undistort", {analytic_u(row, i), numeric_u(row)}}};
        for (const auto& [map, values] : entries) {
          const auto [a, n] = values;
          const double rel = std::abs(a - n) /
                             std::max({std::abs(a), std::abs(n), 1.0});
          if (rel > report.max_relative_error || !std::isfinite(rel)) {
            std::ostringstream os;
            os << std::setprecision(10) << "trial " << trial << " " << map
               << " d" << (row == 0 ? "x" : "y") << "/d" << kParamNames[i]
               << " analytic=" << a << " numeric=" << n << " params="
               << ToJson(k).dump() << " point=(" << p_r.x() << ","
               << p_r.y() << ")";
            report.max_relative_error =
                std::isfinite(rel) ? rel
                                   : std::numeric_limits<double>::infinity();
            report.worst = os.str();
          }
        }
      }
    }
  }
  return report;
}

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Fisheye distortion toolkit", "fishline"};
  app.require_subcommand(1);

  SynthArgs synth;
  CLI::App* synth_cmd =
      app.add_subcommand("synth", "Generate a distorted dataset from a corpus");
  synth_cmd->add_option("--corpus", synth.corpus, "Directory of <name>.png + <name>.json")
      ->required();
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.config.seed, "Master seed")->required();
  synth_cmd->add_option("--per-image", synth.config.per_image,
                        "Parameter draws per source");
  synth_cmd->add_option("--width", synth.config.width, "Output width");
  synth_cmd->add_option("--height", synth.config.height, "Output height");
  synth_cmd->add_option("--focal-ratio", synth.config.focal_over_width,
                        "Pinhole focal length over width");
  synth_cmd->add_option("--theta-max", synth.config.theta_max,
                        "Angle range the profile must be monotone on");
  synth_cmd->add_option("--k1-range", synth.k1_over_f, "k1 interval in units of f")
      ->expected(2);
  for (int i = 0; i < 4; ++i) {
    const std::string name = "--k" + std::to_string(i + 2) + "-ratio";
    synth_cmd->add_option(name, synth.ratios[i],
                          "k" + std::to_string(i + 2) + "/k1 interval")
        ->expected(2);
  }
  synth_cmd->add_option("--m-range", synth.m_range, "mu, mv interval")
      ->expected(2);
  synth_cmd->add_option("--center-jitter", synth.center_jitter,
                        "Max center offset in pixels");

  RectifyArgs rectify;
  CLI::App* rectify_cmd =
      app.add_subcommand("rectify", "Rectify a fisheye image");
  rectify_cmd->add_option("--image", rectify.image, "Fisheye PNG")->required();
  rectify_cmd->add_option("--params", rectify.params, "Parameter JSON")
      ->required();
  rectify_cmd->add_option("--pinhole", rectify.pinhole, "Pinhole JSON")
      ->required();
  rectify_cmd->add_option("--out", rectify.out, "Rectified PNG")->required();
  rectify_cmd->add_option("--mask", rectify.mask,
                          "Mask PNG (default <out>_mask.png)");

  CalibrateArgs calibrate;
  CLI::App* calibrate_cmd = app.add_subcommand(
      "calibrate", "Estimate parameters from distorted straight lines");
  calibrate_cmd->add_option("--lines", calibrate.lines, "Line set JSON")
      ->required();
  calibrate_cmd->add_option("--pinhole", calibrate.pinhole, "Pinhole JSON")
      ->required();
  calibrate_cmd->add_option("--out", calibrate.out, "Result JSON")->required();
  calibrate_cmd->add_option(
      "--init", calibrate.init,
      "Initial parameter JSON (default: equidistant, k1 = f, pinhole center)");
  calibrate_cmd->add_option("--histogram", calibrate.histogram,
                            "Residual histogram CSV");
  calibrate_cmd->add_option("--bins", calibrate.bins, "Histogram bins")
      ->check(CLI::PositiveNumber);
  calibrate_cmd->add_flag("--multiscale", calibrate.multiscale,
                          "Add per-region estimates and fuse them");
  calibrate_cmd->add_option("--max-iterations",
                            calibrate.solver.max_iterations,
                            "Levenberg-Marquardt iteration cap");
  calibrate_cmd->add_option("--free", calibrate.free,
                            "Comma-separated components to optimize")
      ->delimiter(',');

  EvalArgs eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score predictions against a dataset");
  eval_cmd->add_option("--pred", eval.pred, "Prediction manifest (JSON lines)")
      ->required();
  eval_cmd->add_option("--gt", eval.gt, "Dataset manifest")->required();
  eval_cmd->add_option("--report", eval.report, "Per-sample CSV")->required();
  eval_cmd->add_option("--pr", eval.pr, "Per-threshold precision/recall CSV");
  eval_cmd->add_option("--losses", eval.losses, "Per-sample loss CSV");
  eval_cmd->add_option("--tolerance", eval.tolerance,
                       "Edge match tolerance in pixels (default 1% of diagonal)");
  eval_cmd->add_flag("--at-least", eval.at_least,
                     "Threshold heatmaps with value >= tau");
  eval_cmd->add_option("--lambda-m", eval.lambda_m,
                       "Line-pixel weight in the geometric loss");

  GradcheckArgs gradcheck;
  CLI::App* gradcheck_cmd = app.add_subcommand(
      "gradcheck", "Check analytic Jacobians against finite differences");
  gradcheck_cmd->add_option("--seed", gradcheck.seed, "Seed");
  gradcheck_cmd->add_option("--trials", gradcheck.trials, "Configurations")
      ->check(CLI::PositiveNumber);
  gradcheck_cmd->add_flag("--inject-fault", gradcheck.inject_fault)
      ->group("");

  try {
    app.parse(argc, argv);
    if (synth_cmd->parsed()) return RunSynth(synth, out);
    if (rectify_cmd->parsed()) return RunRectify(rectify, out);
    if (calibrate_cmd->parsed()) return RunCalibrate(calibrate, out);
    if (eval_cmd->parsed()) return RunEval(eval, out);
    return RunGradcheckCommand(gradcheck, out, err);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << OneLine(e.what())
        << " (run with --help for usage)\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << OneLine(e.what()) << "\n";
    return IsModelError(e.code()) ? kExitModel : kExitData;
  } catch (const std::exception& e) {
    err << OneLine(e.what()) << "\n";
    return kExitData;
  }
}

}  // namespace fishline::cli
