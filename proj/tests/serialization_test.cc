#include "fishline/serialization.h"

#include <fstream>
#include <functional>
#include <string>

#include <gtest/gtest.h>

#include "fishline/error.h"
#include "test_util.h"

namespace fishline {
namespace {

std::string ParseMessage(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    return e.what();
  }
  ADD_FAILURE() << "no Error thrown";
  return {};
}

TEST(Serialization, ParamsRoundTrip) {
  DistortionParams k;
  k.k = {301.25, -12.5, 3.0e-3, -1.0 / 3.0, 7.0};
  k.mu = 1.05;
  k.mv = 0.97;
  k.u0 = 158.5;
  k.v0 = 161.0 / 3.0;
  EXPECT_EQ(ParamsFromJson(Json::parse(ToJson(k).dump())), k);
}

TEST(Serialization, PinholeRoundTrip) {
  const PinholeSpec pin{123.5, 160.0, 150.0, 320, 300};
  EXPECT_EQ(PinholeFromJson(Json::parse(ToJson(pin).dump())), pin);
}

TEST(Serialization, LineSetRoundTrip) {
  LineSet lines;
  lines.lines.push_back(Polyline{{Vec2(0.1, 0.2), Vec2(10.0 / 3.0, 4.0)}});
  lines.lines.push_back(Polyline{{Vec2(5, 6), Vec2(7, 8), Vec2(9, 10)}});
  const LineSet back = LineSetFromJson(Json::parse(ToJson(lines).dump()));
  ASSERT_EQ(back.size(), 2u);
  for (size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.lines[i].points, lines.lines[i].points);
  }
}

TEST(Serialization, LossWeightsRoundTripAndDefaults) {
  LossWeights w;
  w.lambda_geo = 50.0;
  w.omega[3] = 0.25;
  const LossWeights back = LossWeightsFromJson(Json::parse(ToJson(w).dump()));
  EXPECT_EQ(back.lambda_geo, 50.0);
  EXPECT_EQ(back.omega, w.omega);
  const LossWeights partial = LossWeightsFromJson(Json::parse(R"({"lambda_m": 3})"));
  EXPECT_EQ(partial.lambda_m, 3.0);
  EXPECT_EQ(partial.lambda_geo, LossWeights{}.lambda_geo);
}

TEST(Serialization, MissingFieldIsNamed) {
  Json j = ToJson(testing::SmallEquidistant());
  j.erase("v0");
  EXPECT_NE(ParseMessage([&] { ParamsFromJson(j); }).find("v0"),
            std::string::npos);
  Json pin = ToJson(testing::SmallPinhole());
  pin["width"] = 3.5;
  EXPECT_NE(ParseMessage([&] { PinholeFromJson(pin); }).find("width"),
            std::string::npos);
}

TEST(Serialization, WrongTypeIsNamed) {
  Json j = ToJson(testing::SmallEquidistant());
  j["mu"] = "one";
  EXPECT_NE(ParseMessage([&] { ParamsFromJson(j); }).find("mu"),
            std::string::npos);
  j = ToJson(testing::SmallEquidistant());
  j["k"] = Json::array({1.0, 2.0});
  EXPECT_NE(ParseMessage([&] { ParamsFromJson(j); }).find("k"),
            std::string::npos);
}

TEST(Serialization, MalformedVertexIsNamed) {
  const Json j = Json::parse(R"({"lines": [[[0, 0], [1]]]})");
  EXPECT_NE(ParseMessage([&] { LineSetFromJson(j); }).find("lines"),
            std::string::npos);
}

TEST(Serialization, CalibrationResultFields) {
  CalibrationResult result;
  result.params = testing::SmallEquidistant();
  result.rms_residual = 0.25;
  result.converged = true;
  result.per_region = std::vector<RegionEstimate>(1);
  (*result.per_region)[0].name = "center";
  const Json j = ToJson(result);
  EXPECT_EQ(ParamsFromJson(j["params"]), result.params);
  EXPECT_EQ(j["rms_residual"].get<double>(), 0.25);
  EXPECT_TRUE(j["converged"].get<bool>());
  ASSERT_EQ(j["per_region"].size(), 1u);
  EXPECT_EQ(j["per_region"][0]["status"], "degenerate");
  EXPECT_FALSE(ToJson(CalibrationResult{}).contains("per_region"));
}

TEST(Serialization, FileRoundTripAndErrors) {
  const testing::TempDir dir("serialization");
  const auto path = dir.path() / "params.json";
  WriteJsonFile(path, ToJson(testing::SmallEquidistant()));
  EXPECT_EQ(ParamsFromJson(ReadJsonFile(path)), testing::SmallEquidistant());
  try {
    ReadJsonFile(dir.path() / "absent.json");
    FAIL() << "expected an I/O error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  std::ofstream(dir.path() / "broken.json") << "{\"k\": [1, 2";
  try {
    ReadJsonFile(dir.path() / "broken.json");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

}  // namespace
}  // namespace fishline
