#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "cornea/geometry.hpp"
#include "cornea/patterns.hpp"

using namespace cornea;

namespace {

BinaryImage flip_h(const BinaryImage& m) {
  BinaryImage out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, m.cols() - 1 - c) = m(r, c);
  return out;
}

BinaryImage flip_v(const BinaryImage& m) {
  BinaryImage out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(m.rows() - 1 - r, c) = m(r, c);
  return out;
}

// Foreground extent along one axis (rows or columns containing foreground).
std::size_t span_of(const BinaryImage& m, bool rows) {
  std::size_t lo = SIZE_MAX, hi = 0;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      if (m(r, c)) {
        const std::size_t i = rows ? r : c;
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
  return lo == SIZE_MAX ? 0 : hi - lo + 1;
}

}  // namespace

TEST(Patterns, ShapeNamesRoundTrip) {
  for (Shape s : {Shape::diamond, Shape::triangle, Shape::circle, Shape::cross, Shape::square,
                  Shape::text})
    EXPECT_EQ(shape_from_string(to_string(s)), s);
  EXPECT_THROW(shape_from_string("hexagon"), ParameterError);
}

TEST(Patterns, ConstructionInvariants) {
  EXPECT_THROW(ProbingPattern(Shape::diamond, kWhite, kWhite), ParameterError);
  EXPECT_THROW(ProbingPattern(Shape::diamond, kBlack, kWhite, 0.0), ParameterError);
  EXPECT_THROW(ProbingPattern(Shape::diamond, kBlack, kWhite, -2.0), ParameterError);
  EXPECT_THROW(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, ""), ParameterError);
  EXPECT_THROW(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, "caf\xc3\xa9"), ParameterError);
  EXPECT_NO_THROW(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, "2024-05-01 10:00"));
}

TEST(Patterns, DiamondHasFourFoldSymmetry) {
  const auto raster = rasterize(ProbingPattern(Shape::diamond, kBlack), 16);
  const auto m = binarize_pattern(raster);
  EXPECT_EQ(m, flip_h(m));
  EXPECT_EQ(m, flip_v(m));
}

TEST(Patterns, CircleAreaMatchesPerPixelMembership) {
  const std::size_t n = 64;
  const auto m = shape_mask(ProbingPattern(Shape::circle, kBlack), n);
  // Independent membership oracle: pixel centers within radius n/2.
  std::size_t inside = 0;
  const double radius = n / 2.0;
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = x + 0.5 - radius, dy = y + 0.5 - radius;
      inside += std::hypot(dx, dy) <= radius;
    }
  EXPECT_EQ(count_ones(m), inside);
  const double disk = std::numbers::pi * radius * radius;
  EXPECT_NEAR(static_cast<double>(count_ones(m)), disk, 0.05 * disk);
  EXPECT_GE(static_cast<double>(count_ones(m)), 0.95 * std::numbers::pi * std::pow(0.3 * n, 2));
}

TEST(Patterns, RasterIsDeterministicAndTwoColored) {
  for (Shape s : kGeometricShapes) {
    const ProbingPattern p(s, Rgb{0, 0, 128});
    const auto a = rasterize(p, 40);
    const auto b = rasterize(p, 40);
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_EQ(a.width_px(), 40u);
    EXPECT_EQ(a.height_px(), 40u);
    EXPECT_GT(a.foreground_count, 0u);
    EXPECT_LT(a.foreground_count, a.pixels.size());
    for (const Rgb& px : a.pixels.pixels())
      EXPECT_TRUE(px == p.foreground() || px == p.background());
  }
}

TEST(Patterns, ShapesAreCenteredAndSpanMostOfTheSide) {
  for (Shape s : kGeometricShapes) {
    const auto m = shape_mask(ProbingPattern(s, kBlack), 64);
    EXPECT_GE(span_of(m, true), 0.6 * 64) << to_string(s);
    EXPECT_GE(span_of(m, false), 0.6 * 64) << to_string(s);
    EXPECT_EQ(m, flip_h(m)) << to_string(s);  // all shapes are left/right symmetric
  }
  const auto t = shape_mask(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, "AB"), 64);
  EXPECT_GE(std::max(span_of(t, true), span_of(t, false)), 0.6 * 64);
}

TEST(Patterns, TriangleApexIsAtTheTop) {
  const auto m = shape_mask(ProbingPattern(Shape::triangle, kBlack), 32);
  std::size_t top = 0, bottom = 0;
  for (std::size_t c = 0; c < 32; ++c) {
    top += m(1, c);
    bottom += m(30, c);
  }
  EXPECT_LT(top, bottom);
}

TEST(Patterns, RasterRejectsTinySizes) {
  EXPECT_THROW(rasterize(ProbingPattern(Shape::diamond, kBlack), 3), ParameterError);
  EXPECT_THROW(rasterize(ProbingPattern(Shape::diamond, kBlack), 0), ParameterError);
}

TEST(Patterns, TextRasterContainsGlyphStrokes) {
  const ProbingPattern p(Shape::text, kBlack, kWhite, 14.5, "2024-05-01 10:00");
  const auto r = rasterize(p, 256);
  const auto m = binarize_pattern(r);
  EXPECT_EQ(count_ones(m), r.foreground_count);
  // "1" is a single-glyph payload whose center column is set in every row of the glyph.
  const auto one = shape_mask(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, "1"), 70);
  EXPECT_EQ(one(35, 35), 1);
  // Lowercase letters render like uppercase.
  EXPECT_EQ(shape_mask(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, "ab"), 50),
            shape_mask(ProbingPattern(Shape::text, kBlack, kWhite, 14.5, "AB"), 50));
}

TEST(Patterns, BinarizeRecoversShapeMask) {
  for (Shape s : kGeometricShapes) {
    const ProbingPattern black(s, kBlack);
    const auto r = rasterize(black, 48);
    const auto m = binarize_pattern(r);
    EXPECT_EQ(m, shape_mask(black, 48));
    EXPECT_EQ(count_ones(m), r.foreground_count);
    // Hue is discarded.
    EXPECT_EQ(binarize_pattern(rasterize(ProbingPattern(s, Rgb{255, 0, 0}), 48)), m);
  }
}

TEST(Patterns, BinarizeWorksWithDarkBackground) {
  const ProbingPattern p(Shape::cross, kWhite, kBlack);
  const auto r = rasterize(p, 30);
  EXPECT_EQ(binarize_pattern(r), shape_mask(p, 30));
}

TEST(Patterns, GlobalContrastValues) {
  EXPECT_DOUBLE_EQ(global_contrast(ProbingPattern(Shape::diamond, kBlack)), 1.0);
  EXPECT_NEAR(global_contrast(ProbingPattern(Shape::diamond, Rgb{128, 128, 128})), 0.49804, 1e-5);
  EXPECT_NEAR(global_contrast(ProbingPattern(Shape::diamond, Rgb{128, 128, 128})), 127.0 / 255.0,
              1e-12);
  const double red = std::abs(0.299 * 255 - 255) / 255.0;
  EXPECT_NEAR(global_contrast(ProbingPattern(Shape::diamond, Rgb{255, 0, 0})), red, 1e-12);
}

TEST(Patterns, PatternWithContrastHitsTarget) {
  for (double c : {0.25, 0.5, 0.75, 1.0})
    EXPECT_NEAR(global_contrast(pattern_with_contrast(Shape::circle, c)), c, 0.5 / 255.0 + 1e-12);
  EXPECT_THROW(pattern_with_contrast(Shape::circle, 0.0), ParameterError);
  EXPECT_THROW(pattern_with_contrast(Shape::circle, 1.5), ParameterError);
}

TEST(Patterns, RandomPatternIsDeterministic) {
  for (std::uint64_t seed : {0ull, 7ull, 123456789ull})
    EXPECT_EQ(random_pattern(seed), random_pattern(seed));
  EXPECT_EQ(random_pattern(7).seed(), 7u);
}

TEST(Patterns, RandomPatternsHaveHighContrast) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    EXPECT_GE(global_contrast(random_pattern(seed)), 0.5);
}

TEST(Patterns, RandomPatternRespectsShapeSet) {
  PatternConstraints c;
  c.shapes = std::vector<Shape>{Shape::diamond, Shape::cross};
  std::map<Shape, int> counts;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) ++counts[random_pattern(seed, c).shape()];
  EXPECT_EQ(counts.size(), 2u);
  EXPECT_GT(counts[Shape::diamond], 0);
  EXPECT_GT(counts[Shape::cross], 0);
}

TEST(Patterns, RandomPatternCoversAllGeometricShapesAndColors) {
  std::set<Shape> shapes;
  std::set<std::tuple<int, int, int>> colors;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto p = random_pattern(seed);
    shapes.insert(p.shape());
    colors.insert({p.foreground().r, p.foreground().g, p.foreground().b});
    EXPECT_EQ(p.background(), kWhite);
  }
  EXPECT_EQ(shapes.size(), kGeometricShapes.size());
  EXPECT_EQ(colors.size(), high_contrast_palette().size());
}

TEST(Patterns, RandomTextPatternsAreValid) {
  PatternConstraints c;
  c.shapes = std::vector<Shape>{Shape::text};
  const auto p = random_pattern(99, c);
  EXPECT_EQ(p.shape(), Shape::text);
  EXPECT_EQ(p.text_payload().size(), 6u);
  EXPECT_NO_THROW(rasterize(p, 128));
}

TEST(Patterns, RandomPatternRejectsEmptyConstraints) {
  PatternConstraints no_shapes;
  no_shapes.shapes = std::vector<Shape>{};
  EXPECT_THROW(random_pattern(1, no_shapes), ParameterError);
  PatternConstraints no_colors;
  no_colors.colors = std::vector<Rgb>{};
  EXPECT_THROW(random_pattern(1, no_colors), ParameterError);
  PatternConstraints pale;
  pale.colors = std::vector<Rgb>{Rgb{200, 200, 200}};
  EXPECT_THROW(random_pattern(1, pale), ParameterError);
}

TEST(Patterns, TemplateSidesFollowGeometricProgression) {
  const auto sides = template_sides(16, 1.5, 7);
  ASSERT_EQ(sides.size(), 7u);
  const double expected[] = {10.6667, 12.2112, 13.9794, 16.0, 18.3152, 20.9672, 24.0};
  for (std::size_t k = 0; k < 7; ++k)
    EXPECT_EQ(sides[k], static_cast<std::size_t>(std::lround(expected[k]))) << k;
  EXPECT_EQ(sides, (std::vector<std::size_t>{11, 12, 14, 16, 18, 21, 24}));
}

TEST(Patterns, TemplateSidesPropertiesOverRandomInputs) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> center(4, 200), range(1.01, 4);
  for (int i = 0; i < 300; ++i) {
    const double c = center(rng), f = range(rng);
    const int steps = 3 + 2 * static_cast<int>(rng() % 6);
    const auto sides = template_sides(c, f, steps);
    ASSERT_EQ(sides.size(), static_cast<std::size_t>(steps));
    EXPECT_EQ(sides[static_cast<std::size_t>(steps / 2)],
              std::max<std::size_t>(4, static_cast<std::size_t>(std::lround(c))));
    for (std::size_t k = 1; k < sides.size(); ++k) EXPECT_LE(sides[k - 1], sides[k]);
    for (auto s : sides) EXPECT_GE(s, 4u);
    EXPECT_NEAR(static_cast<double>(sides.front()), std::max(4.0, c / f), 0.5 + 1e-9);
    EXPECT_NEAR(static_cast<double>(sides.back()), c * f, 0.5 + 1e-9);
  }
}

TEST(Patterns, TemplateSidesPreconditions) {
  EXPECT_THROW(template_sides(16, 1.0, 3), ParameterError);
  EXPECT_THROW(template_sides(3.9, 1.5, 3), ParameterError);
  EXPECT_THROW(template_sides(16, 1.5, 4), ParameterError);
  EXPECT_THROW(template_sides(16, 1.5, 1), ParameterError);
}

TEST(Patterns, CenterTemplateMatchesGeometry) {
  const ImagingGeometry g;
  const auto sides = template_sides(reflection_pixel_extent(g), 1.5, 7);
  EXPECT_EQ(sides[3], 16u);
  const auto tpls = multi_scale_templates(base_template(ProbingPattern(Shape::diamond, kBlack)),
                                          reflection_pixel_extent(g), 1.5, 7);
  ASSERT_EQ(tpls.size(), 7u);
  for (std::size_t k = 0; k < 7; ++k) {
    EXPECT_EQ(tpls[k].rows(), sides[k]);
    EXPECT_EQ(tpls[k].cols(), sides[k]);
    EXPECT_GT(count_ones(tpls[k]), 0u);
  }
}

TEST(Patterns, NearestResamplingPreservesBlocks) {
  // 2x2 checker upsampled to 8x8 gives 4x4 blocks.
  BinaryImage m(2, 2);
  m(0, 0) = 1;
  m(1, 1) = 1;
  const auto up = resample_nearest(m, 8);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t c = 0; c < 8; ++c) EXPECT_EQ(up(r, c), m(r / 4, c / 4));
  EXPECT_EQ(resample_nearest(up, 2), m);
  EXPECT_THROW(multi_scale_templates(BinaryImage(8, 8), 16, 1.5, 3), ParameterError);
}
