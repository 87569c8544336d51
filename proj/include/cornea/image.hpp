#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cornea/errors.hpp"

namespace cornea {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// ITU-R BT.601 luma on the 0..255 scale.
constexpr double luma(const Rgb& c) {
  return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b;
}

// Row-major raster. Element (row, col) lives at data()[row * cols + col].
template <typename T>
class Image {
 public:
  using value_type = T;

  Image() = default;
  Image(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Image(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require(data_.size() == rows_ * cols_,
                    "image buffer size does not match rows*cols");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const {
    return data_[row * cols_ + col];
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }
  const std::vector<T>& buffer() const noexcept { return data_; }

  // Copy of the rectangle [row0, row0+rows) x [col0, col0+cols).
  Image sub_image(std::size_t row0, std::size_t col0, std::size_t rows,
                  std::size_t cols) const {
    detail::require(row0 + rows <= rows_ && col0 + cols <= cols_,
                    "sub_image rectangle exceeds image bounds");
    Image out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) = (*this)(row0 + r, col0 + c);
    return out;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// Intensities in [0,1].
using GrayImage = Image<double>;
// Bits in {0,1}.
using BinaryImage = Image<std::uint8_t>;
using RgbImage = Image<Rgb>;

inline std::size_t count_ones(const BinaryImage& img) {
  std::size_t n = 0;
  for (auto b : img.pixels()) n += b != 0;
  return n;
}

}  // namespace cornea
