#pragma once

// Binary PPM (P6) / PGM (P5) codecs, maxval 255 only.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

#include "cornea/errors.hpp"
#include "cornea/image.hpp"

namespace cornea::pnm {

namespace detail {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads an unsigned decimal.
  std::size_t next_int() {
    skip_space();
    std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) throw FormatError("PNM header value too large");
      ++pos_;
    }
    if (pos_ == start) throw FormatError("malformed PNM header");
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
      throw FormatError("missing whitespace after PNM header");
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
};

struct Header {
  char kind;  // '5' or '6'
  std::size_t cols, rows, offset;
};

inline Header parse_header(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
    throw FormatError("not a binary PGM/PPM (expected P5 or P6)");
  HeaderReader rd(bytes);
  Header h{bytes[1], rd.next_int(), rd.next_int(), 0};
  std::size_t maxval = rd.next_int();
  if (maxval != 255) throw FormatError("only maxval 255 is supported");
  if (h.cols == 0 || h.rows == 0) throw FormatError("PNM image has zero extent");
  h.offset = rd.raster_offset();
  std::size_t channels = h.kind == '6' ? 3 : 1;
  if (bytes.size() - h.offset < h.rows * h.cols * channels)
    throw FormatError("PNM raster is truncated");
  return h;
}

inline std::string header(char kind, std::size_t rows, std::size_t cols) {
  return "P" + std::string(1, kind) + "\n" + std::to_string(cols) + " " +
         std::to_string(rows) + "\n255\n";
}

}  // namespace detail

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Decodes P6, or P5 with the gray level replicated into all channels.
inline RgbImage decode_rgb(std::string_view bytes) {
  auto h = detail::parse_header(bytes);
  RgbImage img(h.rows, h.cols);
  auto px = img.pixels();
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data()) + h.offset;
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (h.kind == '6')
      px[i] = Rgb{src[3 * i], src[3 * i + 1], src[3 * i + 2]};
    else
      px[i] = Rgb{src[i], src[i], src[i]};
  }
  return img;
}

// Decodes P5 as intensities value/255. P6 input is rejected.
inline GrayImage decode_gray(std::string_view bytes) {
  auto h = detail::parse_header(bytes);
  if (h.kind != '5') throw FormatError("expected a P5 graymap");
  GrayImage img(h.rows, h.cols);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data()) + h.offset;
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = src[i] / 255.0;
  return img;
}

// Mask pixels are 0 or 255 on disk; any nonzero value reads back as 1.
inline BinaryImage decode_mask(std::string_view bytes) {
  auto h = detail::parse_header(bytes);
  if (h.kind != '5') throw FormatError("expected a P5 graymap");
  BinaryImage img(h.rows, h.cols);
  const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data()) + h.offset;
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = src[i] != 0;
  return img;
}

inline std::string encode(const RgbImage& img) {
  std::string out = detail::header('6', img.rows(), img.cols());
  out.reserve(out.size() + img.size() * 3);
  for (const auto& p : img.pixels()) {
    out.push_back(static_cast<char>(p.r));
    out.push_back(static_cast<char>(p.g));
    out.push_back(static_cast<char>(p.b));
  }
  return out;
}

inline std::string encode(const GrayImage& img) {
  std::string out = detail::header('5', img.rows(), img.cols());
  for (double v : img.pixels()) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

inline std::string encode(const BinaryImage& img) {
  std::string out = detail::header('5', img.rows(), img.cols());
  for (auto b : img.pixels()) out.push_back(static_cast<char>(b ? 255 : 0));
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path);
}

}  // namespace cornea::pnm
