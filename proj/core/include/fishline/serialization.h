#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "fishline/calibrate.h"
#include "fishline/camera_model.h"
#include "fishline/lines.h"
#include "fishline/losses.h"

namespace fishline {

using Json = nlohmann::ordered_json;

// Parsers throw Error(kParse) naming the offending field.
Json ToJson(const DistortionParams& k);
DistortionParams ParamsFromJson(const Json& j);

Json ToJson(const PinholeSpec& pin);
PinholeSpec PinholeFromJson(const Json& j);

Json ToJson(const LineSet& lines);
LineSet LineSetFromJson(const Json& j);

Json ToJson(const LossWeights& weights);
LossWeights LossWeightsFromJson(const Json& j);

Json ToJson(const CalibrationResult& result);

// Reads and parses a whole JSON file; Error(kIo) when unreadable.
Json ReadJsonFile(const std::filesystem::path& path);
// Writes j.dump(indent) followed by a newline.
void WriteJsonFile(const std::filesystem::path& path, const Json& j,
                   int indent = 2);

}  // namespace fishline
