#pragma once

// Image kernels used by iris segmentation and reflection extraction.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <tuple>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/image.hpp"

namespace cornea {

inline GrayImage to_gray(const RgbImage& rgb) {
  detail::require(!rgb.empty(), "cannot convert an empty raster");
  GrayImage out(rgb.rows(), rgb.cols());
  auto src = rgb.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = luma(src[i]) / 255.0;
  return out;
}

// Sobel magnitude normalized by its maximum, borders replicated.
inline GrayImage gradient_magnitude(const GrayImage& img) {
  detail::require(img.rows() >= 3 && img.cols() >= 3, "gradient needs an image of at least 3x3");
  const auto rows = static_cast<std::ptrdiff_t>(img.rows());
  const auto cols = static_cast<std::ptrdiff_t>(img.cols());
  auto at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    r = std::clamp<std::ptrdiff_t>(r, 0, rows - 1);
    c = std::clamp<std::ptrdiff_t>(c, 0, cols - 1);
    return img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  GrayImage mag(img.rows(), img.cols());
  double peak = 0.0;
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      const double gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
      const double m = std::sqrt(gx * gx + gy * gy);
      mag(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m;
      peak = std::max(peak, m);
    }
  }
  if (peak > 0.0)
    for (double& v : mag.pixels()) v /= peak;
  return mag;
}

inline constexpr int kHistogramBins = 256;

inline int histogram_bin(double v) {
  return static_cast<int>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

// Threshold separating bins [0, k) from [k, 256); lies halfway between the
// two bin centers so binarize() reproduces the histogram split exactly.
inline double bin_threshold(int k) { return (k - 0.5) / 255.0; }

// Otsu over an arbitrary sample of intensities.
inline double otsu_threshold(std::span<const double> values) {
  std::array<std::uint64_t, kHistogramBins> hist{};
  for (double v : values) ++hist[static_cast<std::size_t>(histogram_bin(v))];
  const auto occupied = std::count_if(hist.begin(), hist.end(), [](auto h) { return h > 0; });
  if (occupied < 2) throw DegenerateInputError("Otsu threshold needs at least two intensity levels");

  // Runs of empty bins give bitwise-identical variances, so the strict
  // comparison keeps the smallest threshold.
  double total = 0, total_sum = 0;
  for (int i = 0; i < kHistogramBins; ++i) {
    total += static_cast<double>(hist[static_cast<std::size_t>(i)]);
    total_sum += static_cast<double>(hist[static_cast<std::size_t>(i)]) * i;
  }
  double n0 = 0, s0 = 0, best = -1.0;
  int best_k = 1;
  for (int k = 1; k < kHistogramBins; ++k) {
    n0 += static_cast<double>(hist[static_cast<std::size_t>(k - 1)]);
    s0 += static_cast<double>(hist[static_cast<std::size_t>(k - 1)]) * (k - 1);
    const double n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double diff = s0 / n0 - (total_sum - s0) / n1;
    const double bcv = n0 * n1 * diff * diff;
    if (bcv > best) {
      best = bcv;
      best_k = k;
    }
  }
  return bin_threshold(best_k);
}

inline double otsu_threshold(const GrayImage& img) { return otsu_threshold(img.pixels()); }

inline BinaryImage binarize(const GrayImage& img, double t) {
  detail::require(t > 0.0 && t < 1.0, "threshold must lie in (0,1)");
  BinaryImage out(img.rows(), img.cols());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= t;
  return out;
}

struct Circle {
  double cx = 0;
  double cy = 0;
  double radius = 0;
  std::size_t votes = 0;

  friend bool operator==(const Circle&, const Circle&) = default;
};

struct Offset {
  int dx, dy;
};

// Integer offsets whose Euclidean length rounds to r.
inline std::vector<Offset> ring_offsets(int r) {
  std::vector<Offset> ring;
  for (int dy = -r - 1; dy <= r + 1; ++dy)
    for (int dx = -r - 1; dx <= r + 1; ++dx)
      if (std::lround(std::sqrt(static_cast<double>(dx * dx + dy * dy))) == r)
        ring.push_back({dx, dy});
  return ring;
}

// Circle Hough transform with a 1 px (cx, cy, r) accumulator. Each edge pixel
// votes once for every center at rounded distance r. Centers are restricted
// to the image; results are greedy non-maximum suppressed so that no two
// returned centers are closer than half the radius of the stronger one.
inline std::vector<Circle> hough_circles(const GrayImage& edges, double edge_cut, double r_min,
                                         double r_max, std::size_t top_k) {
  const double limit = static_cast<double>(std::min(edges.rows(), edges.cols()));
  detail::require(r_min > 0 && r_min < r_max && r_max < limit,
                  "hough radius range must satisfy 0 < r_min < r_max < min(rows, cols)");
  detail::require(edge_cut > 0 && edge_cut < 1, "edge_cut must lie in (0,1)");

  const int rows = static_cast<int>(edges.rows());
  const int cols = static_cast<int>(edges.cols());
  const int lo = static_cast<int>(std::ceil(r_min));
  const int hi = static_cast<int>(std::floor(r_max));
  if (lo > hi || top_k == 0) return {};

  std::vector<std::pair<int, int>> edge_px;
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x)
      if (edges(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) >= edge_cut)
        edge_px.emplace_back(x, y);
  if (edge_px.empty()) return {};

  const int nr = hi - lo + 1;
  std::vector<std::uint32_t> acc(static_cast<std::size_t>(nr) * rows * cols, 0);
  for (int ri = 0; ri < nr; ++ri) {
    const auto ring = ring_offsets(lo + ri);
    std::uint32_t* plane = acc.data() + static_cast<std::size_t>(ri) * rows * cols;
    for (auto [x, y] : edge_px) {
      for (const auto& o : ring) {
        const int cx = x - o.dx;
        const int cy = y - o.dy;
        if (cx < 0 || cy < 0 || cx >= cols || cy >= rows) continue;
        ++plane[static_cast<std::size_t>(cy) * cols + cx];
      }
    }
  }

  struct Cell {
    std::uint32_t votes;
    int r, cy, cx;
  };
  std::vector<Cell> cells;
  for (int ri = 0; ri < nr; ++ri)
    for (int cy = 0; cy < rows; ++cy)
      for (int cx = 0; cx < cols; ++cx) {
        const auto v = acc[(static_cast<std::size_t>(ri) * rows + cy) * cols + cx];
        if (v > 0) cells.push_back({v, lo + ri, cy, cx});
      }
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    return std::tie(b.votes, a.r, a.cy, a.cx) < std::tie(a.votes, b.r, b.cy, b.cx);
  });

  std::vector<Circle> out;
  for (const auto& cell : cells) {
    bool suppressed = false;
    for (const auto& kept : out) {
      const double ddx = kept.cx - cell.cx;
      const double ddy = kept.cy - cell.cy;
      if (std::sqrt(ddx * ddx + ddy * ddy) < kept.radius / 2.0) {
        suppressed = true;
        break;
      }
    }
    if (suppressed) continue;
    out.push_back({static_cast<double>(cell.cx), static_cast<double>(cell.cy),
                   static_cast<double>(cell.r), cell.votes});
    if (out.size() == top_k) break;
  }
  return out;
}

// Separable box filter of continuous width 2*radius + 1; partially covered
// taps get fractional weight. Borders are replicated.
inline GrayImage box_blur(const GrayImage& img, double radius) {
  detail::require(radius >= 0.0, "blur radius must be nonnegative");
  if (radius == 0.0 || img.empty()) return img;
  std::vector<double> kernel;
  const double half_width = radius + 0.5;
  const int taps = static_cast<int>(std::ceil(radius));
  for (int k = -taps; k <= taps; ++k) {
    const double lo = std::max(k - 0.5, -half_width);
    const double hi = std::min(k + 0.5, half_width);
    kernel.push_back(std::max(0.0, hi - lo) / (2 * half_width));
  }
  const auto rows = static_cast<std::ptrdiff_t>(img.rows());
  const auto cols = static_cast<std::ptrdiff_t>(img.cols());
  GrayImage tmp(img.rows(), img.cols());
  for (std::ptrdiff_t r = 0; r < rows; ++r)
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      double acc = 0;
      for (int k = -taps; k <= taps; ++k) {
        const auto cc = std::clamp<std::ptrdiff_t>(c + k, 0, cols - 1);
        acc += kernel[static_cast<std::size_t>(k + taps)] *
               img(static_cast<std::size_t>(r), static_cast<std::size_t>(cc));
      }
      tmp(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  GrayImage out(img.rows(), img.cols());
  for (std::ptrdiff_t r = 0; r < rows; ++r)
    for (std::ptrdiff_t c = 0; c < cols; ++c) {
      double acc = 0;
      for (int k = -taps; k <= taps; ++k) {
        const auto rr = std::clamp<std::ptrdiff_t>(r + k, 0, rows - 1);
        acc += kernel[static_cast<std::size_t>(k + taps)] *
               tmp(static_cast<std::size_t>(rr), static_cast<std::size_t>(c));
      }
      out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = acc;
    }
  return out;
}

}  // namespace cornea
