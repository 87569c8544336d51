#pragma once

// PNG decoding for uploaded frames; needs libpng at link time.

#include <png.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/image.hpp"

namespace cornea::png {

inline bool looks_like_png(std::string_view bytes) {
  return bytes.substr(0, 8) == std::string_view("\x89PNG\r\n\x1a\n", 8);
}

// Any PNG color type; alpha is composited onto black by libpng.
inline RgbImage decode_rgb(std::string_view bytes) {
  if (!looks_like_png(bytes)) throw FormatError("not a PNG stream");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw FormatError(std::string("bad PNG: ") + img.message);
  img.format = PNG_FORMAT_RGB;
  if (img.width == 0 || img.height == 0) {
    png_image_free(&img);
    throw FormatError("PNG has zero size");
  }
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr))
    throw FormatError(std::string("bad PNG: ") + img.message);
  RgbImage out(img.height, img.width);
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = Rgb{buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]};
  return out;
}

}  // namespace cornea::png
