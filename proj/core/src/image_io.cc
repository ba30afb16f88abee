#include "fishline/image_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

#include "fishline/error.h"

namespace fishline {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr Open(const std::filesystem::path& path, const char* mode) {
  FilePtr file(std::fopen(path.c_str(), mode));
  if (!file) {
    throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  return file;
}

// Decoded PNG rows, either 8 or 16 bits per sample, gray or RGB.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> bytes;

  double Sample(size_t index) const {
    if (bit_depth == 16) {
      const unsigned v = (static_cast<unsigned>(bytes[2 * index]) << 8) |
                         bytes[2 * index + 1];
      return v / 65535.0;
    }
    return bytes[index] / 255.0;
  }
  std::uint16_t Sample16(size_t index) const {
    if (bit_depth == 16) {
      return static_cast<std::uint16_t>((bytes[2 * index] << 8) |
                                        bytes[2 * index + 1]);
    }
    return bytes[index];
  }
};

RawPng ReadRaw(const std::filesystem::path& path) {
  FilePtr file = Open(path, "rb");
  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8)) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "' is not a PNG");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  RawPng raw;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kParse, "corrupt PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);
  raw.bytes.resize(row_bytes * raw.height);
  std::vector<png_bytep> rows(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = raw.bytes.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return raw;
}

void WriteRaw(const std::filesystem::path& path, int width, int height,
              int channels, int bit_depth,
              const std::vector<std::uint8_t>& bytes) {
  FilePtr file = Open(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t row_bytes =
      static_cast<size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + y * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint8_t Quantize8(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

ImageBuffer ReadPng(const std::filesystem::path& path) {
  RawPng raw = ReadRaw(path);
  if (raw.channels != 1 && raw.channels != 3) {
    throw Error(ErrorCode::kParse, "unsupported channel count in '" +
                                       path.string() + "'");
  }
  ImageBuffer image(raw.width, raw.height, raw.channels);
  for (size_t i = 0; i < image.data().size(); ++i) {
    image.data()[i] = raw.Sample(i);
  }
  return image;
}

void WritePng(const std::filesystem::path& path, const ImageBuffer& image) {
  std::vector<std::uint8_t> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(),
                 Quantize8);
  WriteRaw(path, image.width(), image.height(), image.channels(), 8, bytes);
}

void WriteMaskPng(const std::filesystem::path& path, const ValidityMask& mask) {
  std::vector<std::uint8_t> bytes(mask.data().size());
  std::transform(mask.data().begin(), mask.data().end(), bytes.begin(),
                 [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
  WriteRaw(path, mask.width(), mask.height(), 1, 8, bytes);
}

ValidityMask ReadMaskPng(const std::filesystem::path& path) {
  RawPng raw = ReadRaw(path);
  ValidityMask mask(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const size_t index =
          (static_cast<size_t>(y) * raw.width + x) * raw.channels;
      mask.set(x, y, raw.Sample(index) >= 0.5);
    }
  }
  return mask;
}

void WriteGray16Png(const std::filesystem::path& path, const Gray16& image) {
  std::vector<std::uint8_t> bytes(image.data.size() * 2);
  for (size_t i = 0; i < image.data.size(); ++i) {
    bytes[2 * i] = static_cast<std::uint8_t>(image.data[i] >> 8);
    bytes[2 * i + 1] = static_cast<std::uint8_t>(image.data[i] & 0xff);
  }
  WriteRaw(path, image.width, image.height, 1, 16, bytes);
}

Gray16 ReadGray16Png(const std::filesystem::path& path) {
  RawPng raw = ReadRaw(path);
  if (raw.channels != 1) {
    throw Error(ErrorCode::kParse,
                "expected a grayscale PNG in '" + path.string() + "'");
  }
  Gray16 out{raw.width, raw.height, {}};
  out.data.resize(static_cast<size_t>(raw.width) * raw.height);
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = raw.Sample16(i);
  return out;
}

}  // namespace fishline
