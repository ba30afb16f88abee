#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fishline/image.h"

namespace fishline {

// 8- or 16-bit grayscale / RGB PNG (palette and alpha are expanded or
// stripped). Samples are scaled to [0, 1].
ImageBuffer ReadPng(const std::filesystem::path& path);

// 8-bit PNG with round(value * 255), clamped to [0, 255].
void WritePng(const std::filesystem::path& path, const ImageBuffer& image);

// 8-bit grayscale PNG with values {0, 255}.
void WriteMaskPng(const std::filesystem::path& path, const ValidityMask& mask);
ValidityMask ReadMaskPng(const std::filesystem::path& path);

struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
};

void WriteGray16Png(const std::filesystem::path& path, const Gray16& image);
Gray16 ReadGray16Png(const std::filesystem::path& path);

}  // namespace fishline
