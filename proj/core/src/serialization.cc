#include "fishline/serialization.h"

#include <fstream>
#include <sstream>
#include <string>

#include "fishline/error.h"

namespace fishline {
namespace {

const Json& Field(const Json& j, const char* name) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kParse,
                std::string("expected an object holding field '") + name + "'");
  }
  auto it = j.find(name);
  if (it == j.end()) {
    throw Error(ErrorCode::kParse, std::string("missing field '") + name + "'");
  }
  return *it;
}

double Number(const Json& j, const char* name) {
  const Json& v = Field(j, name);
  if (!v.is_number()) {
    throw Error(ErrorCode::kParse,
                std::string("field '") + name + "' must be a number");
  }
  return v.get<double>();
}

int Integer(const Json& j, const char* name) {
  const Json& v = Field(j, name);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::kParse,
                std::string("field '") + name + "' must be an integer");
  }
  return v.get<int>();
}

Vec2 Point(const Json& j, size_t line, size_t vertex) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw Error(ErrorCode::kParse, "field 'lines' [" + std::to_string(line) +
                                       "][" + std::to_string(vertex) +
                                       "] must be [x, y]");
  }
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

}  // namespace

Json ToJson(const DistortionParams& k) {
  Json j;
  j["k"] = Json::array({k.k[0], k.k[1], k.k[2], k.k[3], k.k[4]});
  j["mu"] = k.mu;
  j["mv"] = k.mv;
  j["u0"] = k.u0;
  j["v0"] = k.v0;
  return j;
}

DistortionParams ParamsFromJson(const Json& j) {
  DistortionParams k;
  const Json& coeffs = Field(j, "k");
  if (!coeffs.is_array() || coeffs.size() != kNumRadialTerms) {
    throw Error(ErrorCode::kParse, "field 'k' must be an array of 5 numbers");
  }
  for (int i = 0; i < kNumRadialTerms; ++i) {
    if (!coeffs[i].is_number()) {
      throw Error(ErrorCode::kParse, "field 'k' must be an array of 5 numbers");
    }
    k.k[i] = coeffs[i].get<double>();
  }
  k.mu = Number(j, "mu");
  k.mv = Number(j, "mv");
  k.u0 = Number(j, "u0");
  k.v0 = Number(j, "v0");
  if (!(k.mu > 0.0)) throw Error(ErrorCode::kParse, "field 'mu' must be positive");
  if (!(k.mv > 0.0)) throw Error(ErrorCode::kParse, "field 'mv' must be positive");
  return k;
}

Json ToJson(const PinholeSpec& pin) {
  Json j;
  j["f"] = pin.f;
  j["cx"] = pin.cx;
  j["cy"] = pin.cy;
  j["width"] = pin.width;
  j["height"] = pin.height;
  return j;
}

PinholeSpec PinholeFromJson(const Json& j) {
  PinholeSpec pin;
  pin.f = Number(j, "f");
  pin.cx = Number(j, "cx");
  pin.cy = Number(j, "cy");
  pin.width = Integer(j, "width");
  pin.height = Integer(j, "height");
  pin.Validate();
  return pin;
}

Json ToJson(const LineSet& lines) {
  Json chains = Json::array();
  for (const Polyline& line : lines.lines) {
    Json chain = Json::array();
    for (const Vec2& p : line.points) chain.push_back({p.x(), p.y()});
    chains.push_back(std::move(chain));
  }
  Json j;
  j["lines"] = std::move(chains);
  return j;
}

LineSet LineSetFromJson(const Json& j) {
  const Json& chains = Field(j, "lines");
  if (!chains.is_array()) {
    throw Error(ErrorCode::kParse, "field 'lines' must be an array");
  }
  LineSet lines;
  for (size_t i = 0; i < chains.size(); ++i) {
    if (!chains[i].is_array()) {
      throw Error(ErrorCode::kParse,
                  "field 'lines' [" + std::to_string(i) + "] must be an array");
    }
    Polyline line;
    for (size_t v = 0; v < chains[i].size(); ++v) {
      line.points.push_back(Point(chains[i][v], i, v));
    }
    lines.lines.push_back(std::move(line));
  }
  return lines;
}

Json ToJson(const LossWeights& w) {
  Json j;
  j["omega"] = w.omega;
  j["lambda_fus"] = w.lambda_fus;
  j["lambda_glo"] = w.lambda_glo;
  j["lambda_loc"] = w.lambda_loc;
  j["lambda_m"] = w.lambda_m;
  j["lambda_para"] = w.lambda_para;
  j["lambda_geo"] = w.lambda_geo;
  j["lambda_pix"] = w.lambda_pix;
  return j;
}

LossWeights LossWeightsFromJson(const Json& j) {
  LossWeights w;
  if (j.contains("omega")) {
    const Json& omega = j["omega"];
    if (!omega.is_array() || omega.size() != kNumParams) {
      throw Error(ErrorCode::kParse, "field 'omega' must hold 9 numbers");
    }
    for (int i = 0; i < kNumParams; ++i) {
      if (!omega[i].is_number()) {
        throw Error(ErrorCode::kParse, "field 'omega' must hold 9 numbers");
      }
      w.omega[i] = omega[i].get<double>();
    }
  }
  auto optional = [&j](const char* name, double& dst) {
    if (j.contains(name)) dst = Number(j, name);
  };
  optional("lambda_fus", w.lambda_fus);
  optional("lambda_glo", w.lambda_glo);
  optional("lambda_loc", w.lambda_loc);
  optional("lambda_m", w.lambda_m);
  optional("lambda_para", w.lambda_para);
  optional("lambda_geo", w.lambda_geo);
  optional("lambda_pix", w.lambda_pix);
  w.Validate();
  return w;
}

Json ToJson(const CalibrationResult& result) {
  Json j;
  j["params"] = ToJson(result.params);
  j["rms_residual"] = result.rms_residual;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["gradient_norm"] = result.gradient_norm;
  j["residual_count"] = result.residuals.size();
  j["dropped_vertices"] = result.dropped_vertices;
  if (result.per_region) {
    Json regions = Json::array();
    for (const RegionEstimate& r : *result.per_region) {
      Json entry;
      entry["name"] = r.name;
      entry["chains"] = r.chains;
      switch (r.status) {
        case RegionStatus::kOk:
          entry["status"] = "ok";
          entry["params"] = ToJson(r.params);
          entry["rms_residual"] = r.rms_residual;
          entry["converged"] = r.converged;
          break;
        case RegionStatus::kDegenerate:
          entry["status"] = "degenerate";
          break;
        case RegionStatus::kDiverged:
          entry["status"] = "diverged";
          break;
      }
      regions.push_back(std::move(entry));
    }
    j["per_region"] = std::move(regions);
  }
  return j;
}

Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse,
                "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void WriteJsonFile(const std::filesystem::path& path, const Json& j,
                   int indent) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << j.dump(indent) << '\n';
}

}  // namespace fishline
