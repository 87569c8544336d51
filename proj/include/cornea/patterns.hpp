#pragma once

// Probing patterns: the shape flashed on screen, its rasterization, and the
// multi-scale binary templates searched for in the corneal reflection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cornea/errors.hpp"
#include "cornea/font5x7.hpp"
#include "cornea/image.hpp"

namespace cornea {

enum class Shape { diamond, triangle, circle, cross, square, text };

inline constexpr std::array<Shape, 5> kGeometricShapes = {
    Shape::diamond, Shape::triangle, Shape::circle, Shape::cross, Shape::square};

inline std::string_view to_string(Shape s) {
  switch (s) {
    case Shape::diamond: return "diamond";
    case Shape::triangle: return "triangle";
    case Shape::circle: return "circle";
    case Shape::cross: return "cross";
    case Shape::square: return "square";
    case Shape::text: return "text";
  }
  return "?";
}

inline Shape shape_from_string(std::string_view name) {
  for (Shape s : {Shape::diamond, Shape::triangle, Shape::circle, Shape::cross, Shape::square,
                  Shape::text})
    if (to_string(s) == name) return s;
  throw ParameterError("unknown shape '" + std::string(name) + "'");
}

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

class ProbingPattern {
 public:
  ProbingPattern() = default;

  ProbingPattern(Shape shape, Rgb foreground, Rgb background = kWhite,
                 double physical_height_cm = 14.5, std::string text_payload = {},
                 std::uint64_t seed = 0)
      : shape_(shape),
        foreground_(foreground),
        background_(background),
        physical_height_cm_(physical_height_cm),
        text_payload_(std::move(text_payload)),
        seed_(seed) {
    if (foreground_ == background_)
      throw ParameterError("pattern foreground and background colors must differ");
    if (!(physical_height_cm_ > 0.0) || !std::isfinite(physical_height_cm_))
      throw ParameterError("physical_height_cm must be positive");
    if (shape_ == Shape::text) {
      if (text_payload_.empty()) throw ParameterError("text pattern needs a non-empty payload");
      for (char ch : text_payload_)
        if (ch != '\n' && !font::glyph(ch))
          throw ParameterError(std::string("text payload has unsupported character '") + ch +
                               "'");
    }
  }

  Shape shape() const noexcept { return shape_; }
  Rgb foreground() const noexcept { return foreground_; }
  Rgb background() const noexcept { return background_; }
  double physical_height_cm() const noexcept { return physical_height_cm_; }
  const std::string& text_payload() const noexcept { return text_payload_; }
  std::uint64_t seed() const noexcept { return seed_; }

  friend bool operator==(const ProbingPattern&, const ProbingPattern&) = default;

 private:
  Shape shape_ = Shape::diamond;
  Rgb foreground_ = kBlack;
  Rgb background_ = kWhite;
  double physical_height_cm_ = 14.5;
  std::string text_payload_;
  std::uint64_t seed_ = 0;
};

struct PatternRaster {
  RgbImage pixels;
  Rgb foreground;
  Rgb background;
  std::size_t foreground_count = 0;

  std::size_t width_px() const noexcept { return pixels.cols(); }
  std::size_t height_px() const noexcept { return pixels.rows(); }
};

namespace detail {

// Glyph grid for a (possibly multi-line) text payload, 1 px spacing.
inline BinaryImage text_grid(const std::string& text) {
  std::vector<std::string> lines(1);
  for (char ch : text) {
    if (ch == '\n')
      lines.emplace_back();
    else
      lines.back().push_back(ch);
  }
  std::size_t longest = 0;
  for (const auto& l : lines) longest = std::max(longest, l.size());
  longest = std::max<std::size_t>(longest, 1);
  const std::size_t cols = longest * (font::kGlyphWidth + 1) - 1;
  const std::size_t rows = lines.size() * (font::kGlyphHeight + 1) - 1;
  BinaryImage grid(rows, cols);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    for (std::size_t ci = 0; ci < lines[li].size(); ++ci) {
      const auto g = *font::glyph(lines[li][ci]);
      for (int gy = 0; gy < font::kGlyphHeight; ++gy)
        for (int gx = 0; gx < font::kGlyphWidth; ++gx)
          if (g[gy] & (1u << (font::kGlyphWidth - 1 - gx)))
            grid(li * (font::kGlyphHeight + 1) + gy, ci * (font::kGlyphWidth + 1) + gx) = 1;
    }
  }
  return grid;
}

}  // namespace detail

// Foreground membership of each pixel of a size x size raster. Shapes are
// centered; the square keeps a 10% margin per side so the raster always has
// background, text is scaled to fit 90% of the side.
inline BinaryImage shape_mask(const ProbingPattern& p, std::size_t size) {
  detail::require(size >= 4, "raster size must be at least 4 px");
  BinaryImage mask(size, size);
  const double s = static_cast<double>(size);
  const double c = s / 2.0;
  const double half = s / 2.0;

  if (p.shape() == Shape::text) {
    const BinaryImage grid = detail::text_grid(p.text_payload());
    const double scale =
        0.9 * s / static_cast<double>(std::max(grid.rows(), grid.cols()));
    const double ox = c - scale * static_cast<double>(grid.cols()) / 2.0;
    const double oy = c - scale * static_cast<double>(grid.rows()) / 2.0;
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double gx = std::floor((x + 0.5 - ox) / scale);
        const double gy = std::floor((y + 0.5 - oy) / scale);
        if (gx < 0 || gy < 0 || gx >= static_cast<double>(grid.cols()) ||
            gy >= static_cast<double>(grid.rows()))
          continue;
        mask(y, x) = grid(static_cast<std::size_t>(gy), static_cast<std::size_t>(gx));
      }
    }
    return mask;
  }

  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      const double dx = x + 0.5 - c;
      const double dy = y + 0.5 - c;
      bool inside = false;
      switch (p.shape()) {
        case Shape::diamond:
          inside = std::abs(dx) + std::abs(dy) <= half;
          break;
        case Shape::circle:
          inside = dx * dx + dy * dy <= half * half;
          break;
        case Shape::square:
          inside = std::max(std::abs(dx), std::abs(dy)) <= 0.8 * half;
          break;
        case Shape::cross: {
          const double arm = half / 3.0;
          inside = (std::abs(dx) <= arm) || (std::abs(dy) <= arm);
          break;
        }
        case Shape::triangle: {
          // Apex at the top edge, base on the bottom edge.
          const double depth = (y + 0.5) / s;
          inside = std::abs(dx) <= half * depth;
          break;
        }
        case Shape::text:
          break;
      }
      mask(y, x) = inside;
    }
  }
  return mask;
}

inline PatternRaster rasterize(const ProbingPattern& p, std::size_t size_px) {
  detail::require(size_px >= 4, "raster size must be at least 4 px");
  const BinaryImage mask = shape_mask(p, size_px);
  const std::size_t fg = count_ones(mask);
  if (fg == 0 || fg == mask.size())
    throw ParameterError("raster size too small to represent the pattern");
  PatternRaster out{RgbImage(size_px, size_px, p.background()), p.foreground(), p.background(),
                    fg};
  auto dst = out.pixels.pixels();
  auto src = mask.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (src[i]) dst[i] = p.foreground();
  return out;
}

// Foreground = pixels nearer in luma to the declared foreground color. Equal
// luma distances fall back to exact color equality.
inline BinaryImage binarize_pattern(const PatternRaster& r) {
  const double lf = luma(r.foreground);
  const double lb = luma(r.background);
  BinaryImage mask(r.pixels.rows(), r.pixels.cols());
  auto src = r.pixels.pixels();
  auto dst = mask.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double l = luma(src[i]);
    const double df = std::abs(l - lf);
    const double db = std::abs(l - lb);
    dst[i] = df < db || (df == db && src[i] == r.foreground);
  }
  return mask;
}

inline double global_contrast(const ProbingPattern& p) {
  return std::abs(luma(p.foreground()) - luma(p.background())) / 255.0;
}

// Gray foreground on white whose global contrast is as close to `contrast` as
// 8-bit quantization allows.
inline ProbingPattern pattern_with_contrast(Shape shape, double contrast,
                                            double physical_height_cm = 14.5) {
  detail::require(contrast > 0.0 && contrast <= 1.0, "contrast must lie in (0,1]");
  const auto level =
      static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * (1.0 - contrast)), 0L, 254L));
  return ProbingPattern(shape, Rgb{level, level, level}, kWhite, physical_height_cm);
}

// Foreground colors whose contrast against white is at least 0.5.
inline const std::vector<Rgb>& high_contrast_palette() {
  static const std::vector<Rgb> palette = {
      {0, 0, 0},     {0, 0, 128},  {128, 0, 0},  {0, 100, 0},  {128, 0, 128},
      {255, 0, 0},   {0, 0, 255},  {64, 64, 64}, {0, 128, 128}, {139, 69, 19},
  };
  return palette;
}

struct PatternConstraints {
  std::optional<std::vector<Shape>> shapes;
  std::optional<std::vector<Rgb>> colors;
};

inline ProbingPattern random_pattern(std::uint64_t seed, const PatternConstraints& constraints = {}) {
  std::vector<Shape> shapes(kGeometricShapes.begin(), kGeometricShapes.end());
  if (constraints.shapes) {
    if (constraints.shapes->empty()) throw ParameterError("shape constraint set is empty");
    shapes = *constraints.shapes;
  }
  std::vector<Rgb> colors;
  const auto& candidates = constraints.colors ? *constraints.colors : high_contrast_palette();
  if (constraints.colors && constraints.colors->empty())
    throw ParameterError("color constraint set is empty");
  for (const Rgb& c : candidates)
    if (std::abs(luma(c) - luma(kWhite)) / 255.0 >= 0.5) colors.push_back(c);
  if (colors.empty())
    throw ParameterError("no color in the constraint set reaches contrast 0.5 on white");

  std::mt19937_64 gen(seed);
  const Shape shape = shapes[gen() % shapes.size()];
  const Rgb fg = colors[gen() % colors.size()];
  std::string text;
  if (shape == Shape::text) {
    static constexpr std::string_view kAlphabet = "ABCDEFGHJKLMNPQRSTUVWXYZ23456789";
    for (int i = 0; i < 6; ++i) text.push_back(kAlphabet[gen() % kAlphabet.size()]);
  }
  return ProbingPattern(shape, fg, kWhite, 14.5, std::move(text), seed);
}

// Nearest-neighbour resampling of a mask to side x side.
inline BinaryImage resample_nearest(const BinaryImage& mask, std::size_t side) {
  detail::require(!mask.empty() && side > 0, "cannot resample an empty mask");
  BinaryImage out(side, side);
  for (std::size_t y = 0; y < side; ++y) {
    const auto sy = std::min(mask.rows() - 1, (2 * y + 1) * mask.rows() / (2 * side));
    for (std::size_t x = 0; x < side; ++x) {
      const auto sx = std::min(mask.cols() - 1, (2 * x + 1) * mask.cols() / (2 * side));
      out(y, x) = mask(sy, sx);
    }
  }
  return out;
}

// Side lengths of the template pyramid: round(center * range^(k/half)) for
// k = -half..half, clamped to at least 4 px.
inline std::vector<std::size_t> template_sides(double center_scale_px, double range_factor,
                                               int steps) {
  detail::require(center_scale_px >= 4.0, "center scale must be at least 4 px");
  detail::require(range_factor > 1.0, "range factor must exceed 1");
  detail::require(steps >= 3 && steps % 2 == 1, "steps must be an odd integer >= 3");
  const int half = steps / 2;
  std::vector<std::size_t> sides;
  sides.reserve(static_cast<std::size_t>(steps));
  for (int k = -half; k <= half; ++k) {
    const double side =
        center_scale_px * std::pow(range_factor, static_cast<double>(k) / half);
    sides.push_back(static_cast<std::size_t>(std::max(4L, std::lround(side))));
  }
  return sides;
}

inline std::vector<BinaryImage> multi_scale_templates(const BinaryImage& mask,
                                                      double center_scale_px,
                                                      double range_factor, int steps) {
  detail::require(count_ones(mask) > 0, "template mask is empty");
  std::vector<BinaryImage> out;
  for (std::size_t side : template_sides(center_scale_px, range_factor, steps))
    out.push_back(resample_nearest(mask, side));
  return out;
}

// Raster side used as the source for every scaled template and for the
// reflection stamped by the simulator.
inline constexpr std::size_t kTemplateBasePx = 128;

inline BinaryImage base_template(const ProbingPattern& p) {
  return binarize_pattern(rasterize(p, kTemplateBasePx));
}

}  // namespace cornea
